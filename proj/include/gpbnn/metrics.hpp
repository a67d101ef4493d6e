#pragma once

#include "gpbnn/types.hpp"

#include <map>
#include <utility>
#include <vector>

namespace gpbnn {

using IntervalList = std::vector<std::pair<double, double>>;

struct EvalReport {
  double q2 = 0.0;
  std::map<double, double> cp;    // level -> coverage fraction
  std::map<double, double> mpiw;  // level -> mean width
  Index n_test = 0;
};

/// 1 - SSE / (N_T * population variance of the truths).
double q2(const Vector& predictions, const Vector& truths);

/// Fraction of points with lo <= truth <= hi.
double coverage(const IntervalList& intervals, const Vector& truths);

/// Mean of hi - lo.
double mpiw(const IntervalList& intervals);

/// Symmetric Gaussian interval mean +- q_{(1+level)/2} sd for each point.
IntervalList gaussian_intervals(const Vector& mean, const Vector& variance, double level);

/// Mean of the per-replication reports, level by level.
EvalReport average_reports(const std::vector<EvalReport>& reports);

}  // namespace gpbnn
