#pragma once

#include <cmath>
#include <numbers>

namespace gpbnn {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal quantile: Acklam's rational approximation followed by one
/// Halley step against erfc, accurate to about 1e-15.
double normal_quantile(double p);

}  // namespace gpbnn
