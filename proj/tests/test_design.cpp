#include "gpbnn/design.hpp"
#include "gpbnn/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

using namespace gpbnn;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("gpbnn_design_" + name);
}

// Points per bin when [0,1] is cut into n equal bins.
std::vector<int> bin_counts(const Vector& u, Index n) {
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < u.size(); ++i) {
    const auto b = std::min<Index>(n - 1, static_cast<Index>(u(i) * static_cast<double>(n)));
    ++counts[static_cast<std::size_t>(b)];
  }
  return counts;
}

}  // namespace

TEST_CASE("stratified design with two points splits the domain in halves") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix x = stratified_1d(2, {0.0, 1.0}, {}, seed);
    REQUIRE(x.rows() == 2);
    CHECK(x(0, 0) >= 0.0);
    CHECK(x(0, 0) < 0.5);
    CHECK(x(1, 0) >= 0.5);
    CHECK(x(1, 0) <= 1.0);
  }
}

TEST_CASE("stratified design with one point") {
  const Matrix x = stratified_1d(1, {0.0, 1.0}, {}, 7);
  REQUIRE(x.rows() == 1);
  CHECK(x(0, 0) >= 0.0);
  CHECK(x(0, 0) <= 1.0);
}

TEST_CASE("excluded upper quarter leaves one point per segment of length 0.0075") {
  const Matrix x = stratified_1d(100, {0.0, 1.0}, {{0.75, 1.0}}, 3);
  std::vector<int> seen(100, 0);
  for (Index i = 0; i < 100; ++i) {
    CHECK(x(i, 0) <= 0.75);
    const auto k = std::min<Index>(99, static_cast<Index>(x(i, 0) / 0.0075));
    ++seen[static_cast<std::size_t>(k)];
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  CHECK(std::is_sorted(x.data(), x.data() + x.size()));
}

TEST_CASE("excluded middle segment is avoided and the complement stratified") {
  const Matrix x = stratified_1d(100, {0.0, 1.0}, {{1.0 / 3.0, 2.0 / 3.0}}, 11);
  const double seg = (2.0 / 3.0) / 100.0;
  std::vector<int> seen(100, 0);
  for (Index i = 0; i < 100; ++i) {
    const double v = x(i, 0);
    CHECK_FALSE((v > 1.0 / 3.0 && v < 2.0 / 3.0));
    // Measure of the complement to the left of v.
    const double m = v <= 1.0 / 3.0 ? v : v - 1.0 / 3.0;
    const auto k = std::min<Index>(99, static_cast<Index>(m / seg));
    ++seen[static_cast<std::size_t>(k)];
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

TEST_CASE("invalid stratified inputs") {
  CHECK_THROWS_AS(stratified_1d(0, {0.0, 1.0}, {}, 1), InvalidDesign);
  CHECK_THROWS_AS(stratified_1d(5, {0.0, 1.0}, {{0.0, 1.0}}, 1), InvalidDesign);
  CHECK_THROWS_AS(stratified_1d(5, {0.0, 1.0}, {{0.5, 1.5}}, 1), InvalidDesign);
  CHECK_THROWS_AS(stratified_1d(5, {0.0, 1.0}, {{0.2, 0.5}, {0.4, 0.6}}, 1), InvalidDesign);
}

TEST_CASE("maximin LHS has the Latin property") {
  const Matrix x = maximin_lhs(25, 2, Box::unit(2), 5);
  REQUIRE(x.rows() == 25);
  for (Index k = 0; k < 2; ++k) {
    const auto counts = bin_counts(x.col(k), 25);
    CHECK(std::all_of(counts.begin(), counts.end(), [](int c) { return c == 1; }));
  }
}

TEST_CASE("maximin LHS with n = 2 in one dimension") {
  const Matrix x = maximin_lhs(2, 1, Box::unit(1), 9);
  const double lo = std::min(x(0, 0), x(1, 0));
  const double hi = std::max(x(0, 0), x(1, 0));
  CHECK(lo < 0.5);
  CHECK(hi >= 0.5);
}

TEST_CASE("maximin LHS beats every single restart from the same seed stream") {
  const std::uint64_t seed = 21;
  const Matrix best = maximin_lhs(5, 2, Box::unit(2), seed, 50);
  const double d_best = min_pairwise_distance(best);
  for (int r = 0; r < 50; ++r) {
    const Matrix single = random_lhs(5, 2, derive_seed(seed, "maximin", static_cast<std::uint64_t>(r)));
    CHECK(d_best >= min_pairwise_distance(single));
  }
  CHECK(min_pairwise_distance(maximin_lhs(5, 2, Box::unit(2), seed, 1)) <= d_best);
}

TEST_CASE("maximin LHS maps into the box and keeps the Latin property there") {
  const Box box = Box::from_intervals({{1.0, 1.4}, {10.0, 12.0}, {0.0, 0.2}});
  const Matrix x = maximin_lhs(20, 3, box, 2, 10);
  for (Index i = 0; i < x.rows(); ++i) CHECK(box.contains(x.row(i).transpose()));
  for (Index k = 0; k < 3; ++k) {
    Vector u = (x.col(k).array() - box.lo(k)) / (box.hi(k) - box.lo(k));
    const auto counts = bin_counts(u, 20);
    CHECK(std::all_of(counts.begin(), counts.end(), [](int c) { return c == 1; }));
  }
}

TEST_CASE("designs are reproducible from the seed") {
  CHECK(maximin_lhs(10, 3, Box::unit(3), 4, 20) == maximin_lhs(10, 3, Box::unit(3), 4, 20));
  CHECK(uniform_random(10, Box::unit(2), 4) == uniform_random(10, Box::unit(2), 4));
  CHECK(stratified_1d(10, {0, 1}, {}, 4) == stratified_1d(10, {0, 1}, {}, 4));
  CHECK(uniform_random(10, Box::unit(2), 4) != uniform_random(10, Box::unit(2), 5));
}

TEST_CASE("generate_design dispatches on the kind") {
  DesignSpec spec;
  spec.kind = DesignKind::MaximinLHS;
  spec.n_points = 8;
  spec.seed = 3;
  spec.restarts = 10;
  CHECK(generate_design(spec, Box::unit(2)) == maximin_lhs(8, 2, Box::unit(2), 3, 10));
  spec.kind = DesignKind::StratifiedSegments1D;
  CHECK_THROWS_AS(generate_design(spec, Box::unit(2)), InvalidDesign);
}

TEST_CASE("dataset round trip is bitwise exact") {
  Matrix x(3, 2);
  x << 0.1, 1.0 / 3.0, 0.7, 2.0 / 7.0, 1e-17, 0.999999999999;
  Vector y(3);
  y << -1.0 / 9.0, 3.14159265358979, 1e300;
  const Dataset d(x, y, Box::unit(2));
  const auto path = temp_file("roundtrip.csv");
  write_dataset(d, path);
  const Dataset back = read_dataset(path);
  CHECK(back.inputs == x);
  CHECK(back.outputs == y);
}

TEST_CASE("minimal dataset file") {
  const auto path = temp_file("minimal.csv");
  std::ofstream(path) << "x1,y\n0.5,1.0\n";
  const Dataset d = read_dataset(path);
  CHECK(d.size() == 1);
  CHECK(d.dim() == 1);
  CHECK(d.inputs(0, 0) == 0.5);
  CHECK(d.outputs(0) == 1.0);
}

TEST_CASE("row with the wrong field count reports its line") {
  const auto path = temp_file("bad.csv");
  std::ofstream(path) << "x1,y\n0.5,1.0\n0.1,0.2,0.3\n";
  try {
    read_dataset(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::ofstream(path) << "x1,y\n0.5,abc\n";
  CHECK_THROWS_AS(read_dataset(path), ParseError);
}

TEST_CASE("dataset invariants") {
  CHECK_THROWS_AS(Dataset(Matrix::Zero(3, 1), Vector::Zero(2), Box::unit(1)), InvalidArgument);
  CHECK_THROWS_AS(Dataset(Matrix::Constant(1, 1, 2.0), Vector::Zero(1), Box::unit(1)), InvalidArgument);
}
