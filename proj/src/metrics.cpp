#include "gpbnn/metrics.hpp"

#include "gpbnn/stats.hpp"

#include <algorithm>
#include <cmath>

namespace gpbnn {

double q2(const Vector& predictions, const Vector& truths) {
  if (predictions.size() != truths.size() || truths.size() < 2)
    throw InvalidArgument("q2 needs two equal-length vectors of size >= 2");
  const double n = static_cast<double>(truths.size());
  const double mean = truths.mean();
  const double var = (truths.array() - mean).square().sum() / n;
  if (!(var > 0.0)) throw UndefinedMetric("q2 is undefined for constant truths");
  const double sse = (predictions - truths).squaredNorm();
  return 1.0 - sse / (n * var);
}

double coverage(const IntervalList& intervals, const Vector& truths) {
  if (static_cast<Index>(intervals.size()) != truths.size())
    throw InvalidArgument("coverage needs one interval per truth");
  if (intervals.empty()) throw UndefinedMetric("coverage of an empty test set");
  Index inside = 0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const double t = truths(static_cast<Index>(i));
    if (intervals[i].first <= t && t <= intervals[i].second) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(intervals.size());
}

double mpiw(const IntervalList& intervals) {
  if (intervals.empty()) throw UndefinedMetric("mpiw of an empty interval list");
  double sum = 0.0;
  for (const auto& [lo, hi] : intervals) sum += hi - lo;
  return sum / static_cast<double>(intervals.size());
}

IntervalList gaussian_intervals(const Vector& mean, const Vector& variance, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("interval level must lie in (0, 1)");
  if (mean.size() != variance.size()) throw InvalidArgument("mean and variance differ in length");
  const double q = normal_quantile(0.5 * (1.0 + level));
  IntervalList out(static_cast<std::size_t>(mean.size()));
  for (Index i = 0; i < mean.size(); ++i) {
    const double half = q * std::sqrt(std::max(0.0, variance(i)));
    out[static_cast<std::size_t>(i)] = {mean(i) - half, mean(i) + half};
  }
  return out;
}

EvalReport average_reports(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw InvalidArgument("no reports to average");
  EvalReport avg;
  const double n = static_cast<double>(reports.size());
  for (const EvalReport& r : reports) {
    avg.q2 += r.q2 / n;
    for (const auto& [level, v] : r.cp) avg.cp[level] += v / n;
    for (const auto& [level, v] : r.mpiw) avg.mpiw[level] += v / n;
    avg.n_test += r.n_test;
  }
  avg.n_test = static_cast<Index>(std::llround(static_cast<double>(avg.n_test) / n));
  return avg;
}

}  // namespace gpbnn
