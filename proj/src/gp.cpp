#include "gpbnn/gp.hpp"

#include "gpbnn/random.hpp"
#include "gpbnn/stats.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace gpbnn {

void KernelConfig::validate() const {
  if (!(variance > 0.0)) throw InvalidArgument("kernel variance must be positive");
  if (lengthscales.size() < 1) throw InvalidArgument("kernel needs at least one lengthscale");
  if (!(lengthscales.array() > 0.0).all()) throw InvalidArgument("kernel lengthscales must be positive");
  if (!(nugget >= 0.0)) throw InvalidArgument("kernel nugget must be non-negative");
}

Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelConfig& cfg) {
  if (a.cols() != cfg.lengthscales.size() || b.cols() != cfg.lengthscales.size())
    throw InvalidArgument("kernel_matrix: input dimension does not match lengthscales");
  Matrix k = Matrix::Constant(a.rows(), b.rows(), cfg.variance);
  for (Index d = 0; d < a.cols(); ++d) {
    const double inv_l = 1.0 / cfg.lengthscales(d);
    for (Index j = 0; j < b.rows(); ++j)
      for (Index i = 0; i < a.rows(); ++i)
        k(i, j) *= matern52_profile(std::abs(a(i, d) - b(j, d)) * inv_l);
  }
  return k;
}

namespace {

constexpr int kJitterEscalations = 6;

// Cholesky of K + nugget I with 10x nugget escalation. Returns false on failure.
bool factorize(const Matrix& k, double nugget, Eigen::LLT<Matrix>& llt, double& used_nugget) {
  double jitter = nugget;
  for (int attempt = 0; attempt <= kJitterEscalations; ++attempt) {
    Matrix kn = k;
    kn.diagonal().array() += jitter;
    llt.compute(kn);
    if (llt.info() == Eigen::Success) {
      used_nugget = jitter;
      return true;
    }
    jitter = jitter > 0.0 ? jitter * 10.0 : 1e-12 * k.diagonal().mean();
  }
  return false;
}

// Elementwise d log k / d log l_d for the Matern-5/2 profile.
double dlog_profile_dlog_l(double r) {
  const double s = std::sqrt(5.0) * r;
  return (5.0 / 3.0) * r * r * (1.0 + s) / (1.0 + s + s * s / 3.0);
}

}  // namespace

GPPosterior::GPPosterior(KernelConfig kernel, Matrix train_inputs, Vector train_outputs, double output_shift)
    : kernel_(std::move(kernel)),
      train_inputs_(std::move(train_inputs)),
      train_outputs_(std::move(train_outputs)),
      output_shift_(output_shift) {
  kernel_.validate();
  if (train_inputs_.rows() != train_outputs_.size() || train_inputs_.rows() < 1)
    throw InvalidArgument("GP training inputs/outputs size mismatch");
  if (train_inputs_.cols() != kernel_.lengthscales.size())
    throw InvalidArgument("GP training inputs do not match kernel dimension");

  const Matrix k = kernel_matrix(train_inputs_, train_inputs_, kernel_);
  Eigen::LLT<Matrix> llt;
  double used = 0.0;
  if (!factorize(k, kernel_.nugget, llt, used))
    throw IllConditionedKernel("Cholesky factorization failed after nugget escalation");
  kernel_.nugget = used;
  chol_ = llt.matrixL();
  const Vector centered = train_outputs_.array() - output_shift_;
  alpha_ = llt.solve(centered);
  const double n = static_cast<double>(train_outputs_.size());
  lml_ = -0.5 * centered.dot(alpha_) - chol_.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

GPPrediction GPPosterior::predict(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim()) throw InvalidArgument("GP predict: input dimension mismatch");
  Vector r(train_inputs_.rows());
  for (Index i = 0; i < train_inputs_.rows(); ++i) r(i) = matern52(train_inputs_.row(i).transpose(), x, kernel_);
  GPPrediction p;
  p.mean = output_shift_ + r.dot(alpha_);
  const Vector v = chol_.triangularView<Eigen::Lower>().solve(r);
  p.variance = std::max(0.0, kernel_.variance - v.squaredNorm());
  return p;
}

void GPPosterior::predict(const Matrix& x, Vector& mean, Vector& variance) const {
  if (x.cols() != dim()) throw InvalidArgument("GP predict: input dimension mismatch");
  const Matrix r = kernel_matrix(train_inputs_, x, kernel_);  // N x M
  mean = (r.transpose() * alpha_).array() + output_shift_;
  const Matrix v = chol_.triangularView<Eigen::Lower>().solve(r);
  variance = (kernel_.variance - v.colwise().squaredNorm().array()).cwiseMax(0.0).matrix().transpose();
}

double log_marginal_likelihood(const Matrix& x, const Vector& y, const KernelConfig& cfg,
                               Vector* grad_log_params) {
  const Index n = x.rows();
  const Index d = x.cols();
  const Matrix k = kernel_matrix(x, x, cfg);
  Eigen::LLT<Matrix> llt;
  double nugget = 0.0;
  if (!factorize(k, cfg.nugget, llt, nugget)) return -std::numeric_limits<double>::infinity();
  const Vector alpha = llt.solve(y);
  const Matrix& lower = llt.matrixLLT();
  const double lml = -0.5 * y.dot(alpha) - lower.diagonal().array().log().sum() -
                     0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (grad_log_params == nullptr) return lml;

  const bool estimated = cfg.nugget_mode == NuggetMode::Estimated;
  grad_log_params->resize(d + 1 + (estimated ? 1 : 0));
  // W = alpha alpha^T - K^{-1};  dL/dp = 0.5 tr(W dK/dp)
  Matrix w = alpha * alpha.transpose() - llt.solve(Matrix::Identity(n, n));
  for (Index dim = 0; dim < d; ++dim) {
    double g = 0.0;
    const double inv_l = 1.0 / cfg.lengthscales(dim);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i)
        g += w(i, j) * k(i, j) * dlog_profile_dlog_l(std::abs(x(i, dim) - x(j, dim)) * inv_l);
    (*grad_log_params)(dim) = 0.5 * g;
  }
  // In Fixed mode the nugget is a fixed fraction of the variance, so it scales with it.
  double gv = (w.array() * k.array()).sum();
  if (!estimated) gv += nugget * w.trace();
  (*grad_log_params)(d) = 0.5 * gv;
  if (estimated) (*grad_log_params)(d + 1) = 0.5 * nugget * w.trace();
  return lml;
}

namespace {

using Objective = std::function<double(const Vector&, Vector&)>;

// BFGS with Armijo backtracking; minimizes f over R^n.
Vector bfgs_minimize(const Objective& f, Vector x, int max_iter, double& fx) {
  const Index n = x.size();
  Vector g(n);
  fx = f(x, g);
  if (!std::isfinite(fx)) return x;
  Matrix h = Matrix::Identity(n, n);
  for (int it = 0; it < max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-7) break;
    Vector dir = -h * g;
    if (dir.dot(g) >= 0.0) {
      h.setIdentity();
      dir = -g;
    }
    const double max_step = 2.0;
    if (dir.norm() > max_step) dir *= max_step / dir.norm();
    double step = 1.0;
    Vector xn(n), gn(n);
    double fn = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      xn = x + step * dir;
      fn = f(xn, gn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * step * g.dot(dir)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Vector s = xn - x;
    const Vector yv = gn - g;
    const double sy = s.dot(yv);
    const double improvement = fx - fn;
    x = xn;
    g = gn;
    fx = fn;
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Matrix ident = Matrix::Identity(n, n);
      h = (ident - rho * s * yv.transpose()) * h * (ident - rho * yv * s.transpose()) + rho * s * s.transpose();
    }
    if (improvement < 1e-10 * (1.0 + std::abs(fx))) break;
  }
  return x;
}

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

GPPosterior fit_gp(const Dataset& data, NuggetMode nugget_mode, std::uint64_t seed, const GPFitOptions& options,
                   GPFitTrace* trace) {
  data.validate();
  const Index n = data.size();
  const Index d = data.dim();
  if (n < 2) throw InvalidArgument("fit_gp needs at least two points");

  const double shift = data.outputs.mean();
  const double sd = std::sqrt((data.outputs.array() - shift).square().mean());
  const double scale = sd > 0.0 ? sd : 1.0;
  const Vector ys = (data.outputs.array() - shift) / scale;

  Vector width = data.box.width();
  for (Index k = 0; k < d; ++k)
    if (!(width(k) > 0.0)) width(k) = 1.0;

  const bool estimated = nugget_mode == NuggetMode::Estimated;
  const Index np = d + 1 + (estimated ? 1 : 0);
  Vector lo(np), hi(np);  // log-space bounds
  for (Index k = 0; k < d; ++k) {
    lo(k) = std::log(options.lengthscale_lo * width(k));
    hi(k) = std::log(options.lengthscale_hi * width(k));
  }
  lo(d) = std::log(options.variance_lo);
  hi(d) = std::log(options.variance_hi);
  if (estimated) {
    lo(d + 1) = std::log(options.nugget_lo);
    hi(d + 1) = std::log(options.nugget_hi);
  }

  auto to_config = [&](const Vector& logp) {
    KernelConfig cfg;
    cfg.lengthscales = logp.head(d).array().exp();
    cfg.variance = std::exp(logp(d));
    cfg.nugget_mode = nugget_mode;
    cfg.nugget = estimated ? std::exp(logp(d + 1)) : options.fixed_nugget * cfg.variance;
    return cfg;
  };
  // Unconstrained u -> log p = lo + (hi - lo) sigmoid(u)
  auto to_logp = [&](const Vector& u) {
    Vector logp(np);
    for (Index i = 0; i < np; ++i) logp(i) = lo(i) + (hi(i) - lo(i)) * sigmoid(u(i));
    return logp;
  };
  const Objective objective = [&](const Vector& u, Vector& grad) {
    const Vector logp = to_logp(u);
    Vector g_logp;
    const double lml = log_marginal_likelihood(data.inputs, ys, to_config(logp), &g_logp);
    grad.resize(np);
    if (!std::isfinite(lml)) {
      grad.setZero();
      return std::numeric_limits<double>::infinity();
    }
    for (Index i = 0; i < np; ++i) {
      const double s = sigmoid(u(i));
      grad(i) = -g_logp(i) * (hi(i) - lo(i)) * s * (1.0 - s);
    }
    return -lml;
  };

  Pcg32 rng(seed, derive_seed(seed, "gp/restarts"));
  Vector best_u;
  double best_f = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    Vector u0(np);
    for (Index i = 0; i < np; ++i) {
      // First start at a neutral point: lengthscale ~ 0.2 width, variance 1, nugget 1e-4.
      double frac = rng.uniform(0.02, 0.98);
      if (r == 0) {
        if (i < d) frac = (std::log(0.2 * width(i)) - lo(i)) / (hi(i) - lo(i));
        else if (i == d) frac = (0.0 - lo(i)) / (hi(i) - lo(i));
        else frac = (std::log(1e-4) - lo(i)) / (hi(i) - lo(i));
      }
      u0(i) = logit(std::clamp(frac, 1e-3, 1.0 - 1e-3));
    }
    if (trace != nullptr) {
      Vector g0;
      trace->start_lml.push_back(-objective(u0, g0));
    }
    double f = 0.0;
    const Vector u = bfgs_minimize(objective, u0, options.max_iterations, f);
    if (f < best_f) {
      best_f = f;
      best_u = u;
    }
  }
  if (!std::isfinite(best_f)) throw IllConditionedKernel("no hyperparameter start produced a finite likelihood");

  if (trace != nullptr) trace->final_lml = -best_f;

  KernelConfig cfg = to_config(to_logp(best_u));
  cfg.variance *= scale * scale;
  cfg.nugget *= scale * scale;
  return GPPosterior(std::move(cfg), data.inputs, data.outputs, shift);
}

GPPrediction gp_predict(const GPPosterior& gp, const Eigen::Ref<const Vector>& x) { return gp.predict(x); }

double gp_quantile(const GPPosterior& gp, const Eigen::Ref<const Vector>& x, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("quantile level must lie in (0, 1)");
  const GPPrediction p = gp.predict(x);
  return p.mean + normal_quantile(level) * p.sd();
}

}  // namespace gpbnn
