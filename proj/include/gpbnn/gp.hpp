#pragma once

#include "gpbnn/design.hpp"
#include "gpbnn/types.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace gpbnn {

enum class NuggetMode { Fixed, Estimated };

/// Hyperparameters of the tensorized Matern-5/2 kernel, in output units.
struct KernelConfig {
  double variance = 1.0;
  Vector lengthscales;
  double nugget = 0.0;
  NuggetMode nugget_mode = NuggetMode::Fixed;

  void validate() const;
};

/// One-dimensional Matern-5/2 correlation m(r) = (1 + sqrt5 r + 5r^2/3) exp(-sqrt5 r).
template <typename T>
T matern52_profile(T r) {
  using std::exp;
  using std::sqrt;
  const T s = sqrt(T(5)) * r;
  return (T(1) + s + s * s / T(3)) * exp(-s);
}

/// variance * prod_k m(|x_k - x'_k| / l_k)
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar matern52(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& xp,
                                   const KernelConfig& cfg) {
  using T = typename DerivedA::Scalar;
  T k = T(cfg.variance);
  for (Index i = 0; i < x.size(); ++i) {
    using std::abs;
    k *= matern52_profile<T>(abs(x(i) - xp(i)) / T(cfg.lengthscales(i)));
  }
  return k;
}

/// Kernel matrix between the rows of a and the rows of b (no nugget).
Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelConfig& cfg);

struct GPPrediction {
  double mean = 0.0;
  double variance = 0.0;
  double sd() const { return std::sqrt(variance); }
};

/// Fitted GP. Immutable after construction; prediction is O(N) per point for
/// the mean and O(N^2) for the variance.
class GPPosterior {
 public:
  GPPosterior() = default;

  /// Conditions the zero-mean GP (after centering by `output_shift`) on data.
  /// Escalates the nugget by 10x up to six times if the factorization fails.
  GPPosterior(KernelConfig kernel, Matrix train_inputs, Vector train_outputs, double output_shift);

  const KernelConfig& kernel() const { return kernel_; }
  const Matrix& train_inputs() const { return train_inputs_; }
  const Vector& train_outputs() const { return train_outputs_; }
  const Vector& alpha() const { return alpha_; }
  /// Lower-triangular factor of K + nugget I.
  const Matrix& chol() const { return chol_; }
  /// Prior mean in the centered frame (always zero); the centering shift is added back on prediction.
  double prior_mean() const { return 0.0; }
  double output_shift() const { return output_shift_; }
  double log_marginal_likelihood() const { return lml_; }
  Index dim() const { return train_inputs_.cols(); }

  GPPrediction predict(const Eigen::Ref<const Vector>& x) const;
  /// Row-wise predictions for an M x d matrix.
  void predict(const Matrix& x, Vector& mean, Vector& variance) const;

 private:
  KernelConfig kernel_;
  Matrix train_inputs_;
  Vector train_outputs_;
  double output_shift_ = 0.0;
  Vector alpha_;
  Matrix chol_;
  double lml_ = 0.0;
};

struct GPFitOptions {
  int restarts = 10;
  int max_iterations = 200;
  double lengthscale_lo = 1e-2;  // times the box width
  double lengthscale_hi = 1e1;
  double variance_lo = 1e-4;     // times var(y)
  double variance_hi = 1e2;
  double nugget_lo = 1e-8;       // times var(y), Estimated mode
  double nugget_hi = 1.0;
  double fixed_nugget = 1e-8;    // times the kernel variance, Fixed mode
};

/// Log marginal likelihood of (x, y) under a zero-mean GP and its gradient
/// with respect to (log lengthscales, log variance[, log nugget]).
double log_marginal_likelihood(const Matrix& x, const Vector& y, const KernelConfig& cfg,
                               Vector* grad_log_params = nullptr);

/// Log marginal likelihoods (standardized outputs) at each multi-start
/// initial point and at the returned optimum.
struct GPFitTrace {
  std::vector<double> start_lml;
  double final_lml = 0.0;
};

/// Maximum-likelihood fit by multi-start quasi-Newton in log-parameter space.
GPPosterior fit_gp(const Dataset& data, NuggetMode nugget_mode, std::uint64_t seed,
                   const GPFitOptions& options = {}, GPFitTrace* trace = nullptr);

GPPrediction gp_predict(const GPPosterior& gp, const Eigen::Ref<const Vector>& x);

/// mean + Phi^{-1}(level) * sd
double gp_quantile(const GPPosterior& gp, const Eigen::Ref<const Vector>& x, double level);

}  // namespace gpbnn
