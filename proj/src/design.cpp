#include "gpbnn/design.hpp"

#include "gpbnn/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace gpbnn {

Box Box::unit(Index d) { return Box{Vector::Zero(d), Vector::Ones(d)}; }

Box Box::from_intervals(const std::vector<Interval>& axes) {
  Box b{Vector(static_cast<Index>(axes.size())), Vector(static_cast<Index>(axes.size()))};
  for (std::size_t k = 0; k < axes.size(); ++k) {
    b.lo(static_cast<Index>(k)) = axes[k].lo;
    b.hi(static_cast<Index>(k)) = axes[k].hi;
  }
  return b;
}

bool Box::contains(const Eigen::Ref<const Vector>& x, double slack) const {
  if (x.size() != dim()) return false;
  for (Index k = 0; k < dim(); ++k) {
    const double tol = slack * std::max(1.0, hi(k) - lo(k));
    if (x(k) < lo(k) - tol || x(k) > hi(k) + tol) return false;
  }
  return true;
}

Vector Box::to_unit(const Eigen::Ref<const Vector>& x) const {
  return ((x - lo).array() / width().array()).matrix();
}

Vector Box::from_unit(const Eigen::Ref<const Vector>& u) const {
  return lo + (u.array() * width().array()).matrix();
}

Dataset::Dataset(Matrix x, Vector y, Box b)
    : inputs(std::move(x)), outputs(std::move(y)), box(std::move(b)) {
  validate();
}

Dataset::Dataset(Matrix x, Vector y) : inputs(std::move(x)), outputs(std::move(y)) {
  if (inputs.rows() == 0 || inputs.cols() == 0)
    throw InvalidArgument("dataset needs at least one row and one column");
  box.lo = inputs.colwise().minCoeff().transpose();
  box.hi = inputs.colwise().maxCoeff().transpose();
  validate();
}

void Dataset::validate() const {
  if (inputs.rows() < 1 || inputs.cols() < 1)
    throw InvalidArgument("dataset needs N >= 1 and d >= 1");
  if (inputs.rows() != outputs.size())
    throw InvalidArgument("dataset inputs have " + std::to_string(inputs.rows()) +
                          " rows but outputs have " + std::to_string(outputs.size()));
  if (box.dim() != inputs.cols())
    throw InvalidArgument("dataset box dimension does not match inputs");
  for (Index i = 0; i < inputs.rows(); ++i) {
    if (!box.contains(inputs.row(i).transpose()))
      throw InvalidArgument("dataset row " + std::to_string(i) + " lies outside the box");
  }
}

namespace {

// Pieces of domain \ excluded, in increasing order.
std::vector<Interval> complement(Interval domain, std::vector<Interval> excluded) {
  std::sort(excluded.begin(), excluded.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> pieces;
  double cursor = domain.lo;
  for (const auto& ex : excluded) {
    if (ex.hi < ex.lo) throw InvalidDesign("excluded segment has hi < lo");
    if (ex.lo < domain.lo || ex.hi > domain.hi)
      throw InvalidDesign("excluded segment lies outside the domain");
    if (ex.lo < cursor) throw InvalidDesign("excluded segments overlap");
    if (ex.lo > cursor) pieces.push_back({cursor, ex.lo});
    cursor = ex.hi;
  }
  if (cursor < domain.hi) pieces.push_back({cursor, domain.hi});
  return pieces;
}

// Maps a measure coordinate s in [0, total] onto the complement pieces.
double through_pieces(const std::vector<Interval>& pieces, double s) {
  for (const auto& p : pieces) {
    if (s <= p.length()) return p.lo + s;
    s -= p.length();
  }
  return pieces.back().hi;
}

}  // namespace

Matrix stratified_1d(Index n, Interval domain, const std::vector<Interval>& excluded,
                     std::uint64_t seed) {
  if (n < 1) throw InvalidDesign("stratified design needs n >= 1");
  if (!(domain.hi > domain.lo)) throw InvalidDesign("empty design domain");
  const auto pieces = complement(domain, excluded);
  const double total = std::accumulate(pieces.begin(), pieces.end(), 0.0,
                                       [](double acc, const Interval& p) { return acc + p.length(); });
  if (!(total > 0.0)) throw InvalidDesign("domain minus excluded segments has zero length");

  Pcg32 rng(seed, derive_seed(seed, "stratified"));
  const double seg = total / static_cast<double>(n);
  Matrix x(n, 1);
  for (Index i = 0; i < n; ++i) {
    const double s = (static_cast<double>(i) + rng.uniform()) * seg;
    x(i, 0) = through_pieces(pieces, std::min(s, total));
  }
  return x;  // already ascending: segments are visited in order
}

Matrix random_lhs(Index n, Index d, std::uint64_t seed) {
  Pcg32 rng(seed, derive_seed(seed, "lhs"));
  Matrix u(n, d);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), Index{0});
    shuffle(perm.begin(), perm.end(), rng);
    for (Index i = 0; i < n; ++i)
      u(i, k) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + rng.uniform()) /
                static_cast<double>(n);
  }
  return u;
}

double min_pairwise_distance(const Matrix& points) {
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < points.rows(); ++i)
    for (Index j = i + 1; j < points.rows(); ++j)
      best = std::min(best, (points.row(i) - points.row(j)).squaredNorm());
  return std::sqrt(best);
}

Matrix maximin_lhs(Index n, Index d, const Box& box, std::uint64_t seed, int restarts) {
  if (n < 2 || d < 1 || restarts < 1) throw InvalidDesign("maximin LHS needs n >= 2, d >= 1, restarts >= 1");
  if (box.dim() != d) throw InvalidDesign("maximin LHS box dimension mismatch");
  Matrix best;
  double best_dist = -1.0;
  for (int r = 0; r < restarts; ++r) {
    Matrix u = random_lhs(n, d, derive_seed(seed, "maximin", static_cast<std::uint64_t>(r)));
    const double dist = min_pairwise_distance(u);
    if (dist > best_dist) {
      best_dist = dist;
      best = std::move(u);
    }
  }
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) x.row(i) = box.from_unit(best.row(i).transpose()).transpose();
  return x;
}

Matrix uniform_random(Index n, const Box& box, std::uint64_t seed) {
  if (n < 1) throw InvalidDesign("uniform design needs n >= 1");
  Pcg32 rng(seed, derive_seed(seed, "uniform"));
  Matrix x(n, box.dim());
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < box.dim(); ++k) x(i, k) = rng.uniform(box.lo(k), box.hi(k));
  return x;
}

Matrix generate_design(const DesignSpec& spec, const Box& box) {
  switch (spec.kind) {
    case DesignKind::StratifiedSegments1D:
      if (box.dim() != 1) throw InvalidDesign("stratified design is one-dimensional");
      return stratified_1d(spec.n_points, {box.lo(0), box.hi(0)}, spec.excluded, spec.seed);
    case DesignKind::MaximinLHS:
      return maximin_lhs(spec.n_points, box.dim(), box, spec.seed, spec.restarts);
    case DesignKind::UniformRandom:
      return uniform_random(spec.n_points, box, spec.seed);
  }
  throw InvalidDesign("unknown design kind");
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (Index k = 0; k < data.dim(); ++k) out << 'x' << (k + 1) << ',';
  out << "y\n";
  char buf[64];
  auto put = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    out.write(buf, res.ptr - buf);
  };
  for (Index i = 0; i < data.size(); ++i) {
    for (Index k = 0; k < data.dim(); ++k) {
      put(data.inputs(i, k));
      out << ',';
    }
    put(data.outputs(i));
    out << '\n';
  }
  if (!out) throw Error("write to " + path.string() + " failed");
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) fields.push_back(cell);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  ++lineno;
  const auto header = split_csv(trim(line));
  if (header.size() < 2) throw ParseError("header needs x1,...,xd,y", lineno);
  const std::size_t d = header.size() - 1;
  for (std::size_t k = 0; k < d; ++k)
    if (trim(header[k]) != "x" + std::to_string(k + 1))
      throw ParseError("expected header column x" + std::to_string(k + 1), lineno);
  if (trim(header.back()) != "y") throw ParseError("last header column must be y", lineno);

  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_csv(t);
    if (fields.size() != d + 1)
      throw ParseError("expected " + std::to_string(d + 1) + " fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    for (const auto& f : fields) {
      const std::string cell = trim(f);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw ParseError("non-numeric cell '" + cell + "'", lineno);
      values.push_back(v);
    }
  }
  const auto n = static_cast<Index>(values.size() / (d + 1));
  if (n == 0) throw ParseError("no data rows", lineno);
  Matrix x(n, static_cast<Index>(d));
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < static_cast<Index>(d); ++k)
      x(i, k) = values[static_cast<std::size_t>(i) * (d + 1) + static_cast<std::size_t>(k)];
    y(i) = values[static_cast<std::size_t>(i) * (d + 1) + d];
  }
  return Dataset(std::move(x), std::move(y));
}

}  // namespace gpbnn
