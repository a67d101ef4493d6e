#include "gpbnn/mcmc.hpp"

#include "gpbnn/design.hpp"

#include <limits>

namespace gpbnn {

void ChainConfig::validate() const {
  if (n_samples < 1) throw InvalidArgument("chain needs n_samples >= 1");
  if (warmup < 0) throw InvalidArgument("chain warmup must be non-negative");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw InvalidArgument("target_accept must lie in (0, 1)");
  if (max_tree_depth < 1 || max_tree_depth > 15) throw InvalidArgument("max_tree_depth must lie in [1, 15]");
  if (!(step_size > 0.0)) throw InvalidArgument("initial step size must be positive");
  if (kind == SamplerKind::HMC && n_leapfrog < 1) throw InvalidArgument("HMC needs n_leapfrog >= 1");
}

MHStep<Vector> mh_step(const Vector& current, double current_log_density,
                       const std::function<double(const Vector&)>& log_target, double proposal_std, Pcg32& rng) {
  auto propose = [proposal_std](const Vector& x, Pcg32& r) {
    Vector y(x.size());
    for (Index i = 0; i < x.size(); ++i) y(i) = x(i) + proposal_std * r.normal();
    return y;
  };
  return mh_transition(current, current_log_density, log_target, propose, rng);
}

SampleSet mh_sample(const std::function<double(const Vector&)>& log_target, const Vector& init,
                    const MHConfig& cfg, double* adapted_std) {
  if (cfg.n_samples < 1 || cfg.warmup < 0 || !(cfg.proposal_std > 0.0))
    throw InvalidArgument("invalid Metropolis-Hastings configuration");
  Pcg32 rng(cfg.seed, derive_seed(cfg.seed, "mh"));
  Vector x = init;
  double lp = log_target(x);
  if (!std::isfinite(lp)) throw SamplerFailure("log target is not finite at the initial point");
  double log_std = std::log(cfg.proposal_std);

  SampleSet out;
  out.draws.resize(cfg.n_samples, x.size());
  out.log_density.resize(cfg.n_samples);
  Index accepted = 0;
  for (Index it = 0; it < cfg.warmup + cfg.n_samples; ++it) {
    const auto step = mh_step(x, lp, log_target, std::exp(log_std), rng);
    x = step.state;
    lp = step.log_density;
    if (it < cfg.warmup) {
      const double rate = 1.0 / std::pow(static_cast<double>(it + 1), 0.6);
      log_std += rate * ((step.accepted ? 1.0 : 0.0) - cfg.target_accept);
    } else {
      const Index k = it - cfg.warmup;
      out.draws.row(k) = x.transpose();
      out.log_density(k) = lp;
      accepted += step.accepted ? 1 : 0;
    }
  }
  out.accept_rate = static_cast<double>(accepted) / static_cast<double>(cfg.n_samples);
  out.step_size = std::exp(log_std);
  out.ess = effective_sample_size(out.draws);
  if (adapted_std != nullptr) *adapted_std = out.step_size;
  return out;
}

LeapfrogResult leapfrog(const Vector& position, const Vector& momentum, double step, int n_steps,
                        const LogDensityFn& log_target) {
  if (!(step > 0.0)) throw InvalidArgument("leapfrog step must be positive");
  LeapfrogResult r{position, momentum, false};
  Vector grad;
  log_target(r.position, &grad);
  for (int s = 0; s < n_steps; ++s) {
    if (!grad.allFinite()) {
      r.divergent = true;
      return r;
    }
    r.momentum += 0.5 * step * grad;
    r.position += step * r.momentum;
    log_target(r.position, &grad);
    if (!grad.allFinite()) {
      r.divergent = true;
      return r;
    }
    r.momentum += 0.5 * step * grad;
  }
  return r;
}

namespace {

struct PhasePoint {
  Vector q;
  Vector p;
  Vector grad;
  double logp = 0.0;

  double hamiltonian() const {
    const double h = -logp + 0.5 * p.squaredNorm();
    return std::isfinite(h) ? h : std::numeric_limits<double>::infinity();
  }
};

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Takes one leapfrog step of signed size `eps`, updating z in place.
void step_point(PhasePoint& z, double eps, const LogDensityFn& f) {
  z.p += 0.5 * eps * z.grad;
  z.q += eps * z.p;
  z.logp = f(z.q, &z.grad);
  if (!std::isfinite(z.logp) || !z.grad.allFinite()) {
    z.logp = -std::numeric_limits<double>::infinity();
    z.grad.setZero();
    return;
  }
  z.p += 0.5 * eps * z.grad;
}

bool no_u_turn(const Vector& rho, const Vector& p_begin, const Vector& p_end) {
  return rho.dot(p_begin) > 0.0 && rho.dot(p_end) > 0.0;
}

class NutsKernel {
 public:
  NutsKernel(const LogDensityFn& f, const ChainConfig& cfg, Pcg32& rng) : f_(f), cfg_(cfg), rng_(rng) {}

  struct Transition {
    PhasePoint point;
    double accept_stat = 0.0;
    bool divergent = false;
    int depth = 0;
  };

  Transition transition(const PhasePoint& current, double eps) {
    PhasePoint z = current;
    for (Index i = 0; i < z.p.size(); ++i) z.p(i) = rng_.normal();
    h0_ = z.hamiltonian();
    sum_metro_ = 0.0;
    n_leapfrog_ = 0;
    divergent_ = false;

    PhasePoint left = z;
    PhasePoint right = z;
    PhasePoint sample = z;
    double log_sum_w = 0.0;
    Vector rho = z.p;
    int depth = 0;
    while (depth < cfg_.max_tree_depth) {
      const bool forward = rng_.uniform() < 0.5;
      PhasePoint& near = forward ? right : left;
      const Vector near_p = near.p;
      Subtree sub = build(near, forward ? +eps : -eps, depth);
      if (!sub.valid) break;
      ++depth;
      if (std::log(rng_.uniform()) < sub.log_sum_w - log_sum_w) sample = sub.proposal;
      log_sum_w = log_add_exp(log_sum_w, sub.log_sum_w);
      const Vector& far_p = forward ? left.p : right.p;
      const bool extra_ok = no_u_turn(rho + sub.p_begin, far_p, sub.p_begin) &&
                            no_u_turn(sub.rho + near_p, near_p, sub.p_end);
      rho += sub.rho;
      if (!extra_ok || !no_u_turn(rho, left.p, right.p)) break;
    }
    Transition t;
    t.point = std::move(sample);
    t.accept_stat = n_leapfrog_ > 0 ? sum_metro_ / static_cast<double>(n_leapfrog_) : 0.0;
    t.divergent = divergent_;
    t.depth = depth;
    return t;
  }

 private:
  struct Subtree {
    PhasePoint proposal;
    Vector rho;
    Vector p_begin;  // momentum at the end adjacent to the existing trajectory
    Vector p_end;    // momentum at the outer end
    double log_sum_w = -std::numeric_limits<double>::infinity();
    bool valid = true;
  };

  // Extends `edge` by 2^depth leapfrog steps of size eps; `edge` ends at the new outer point.
  Subtree build(PhasePoint& edge, double eps, int depth) {
    if (depth == 0) {
      step_point(edge, eps, f_);
      const double h = edge.hamiltonian();
      ++n_leapfrog_;
      Subtree s;
      const double delta = h0_ - h;
      sum_metro_ += delta > 0.0 ? 1.0 : std::exp(delta);
      if (!(h - h0_ <= cfg_.divergence_threshold)) {
        divergent_ = true;
        s.valid = false;
        return s;
      }
      s.proposal = edge;
      s.rho = edge.p;
      s.p_begin = edge.p;
      s.p_end = edge.p;
      s.log_sum_w = delta;
      return s;
    }
    Subtree inner = build(edge, eps, depth - 1);
    if (!inner.valid) return inner;
    Subtree outer = build(edge, eps, depth - 1);
    if (!outer.valid) return outer;

    Subtree s;
    s.log_sum_w = log_add_exp(inner.log_sum_w, outer.log_sum_w);
    s.proposal = std::log(rng_.uniform()) < outer.log_sum_w - s.log_sum_w ? std::move(outer.proposal)
                                                                           : std::move(inner.proposal);
    s.rho = inner.rho + outer.rho;
    // U-turn over the merged subtree, plus the checks across its two halves.
    s.valid = no_u_turn(s.rho, inner.p_begin, outer.p_end) &&
              no_u_turn(inner.rho + outer.p_begin, inner.p_begin, outer.p_begin) &&
              no_u_turn(outer.rho + inner.p_end, inner.p_end, outer.p_end);
    s.p_begin = std::move(inner.p_begin);
    s.p_end = std::move(outer.p_end);
    return s;
  }

  const LogDensityFn& f_;
  const ChainConfig& cfg_;
  Pcg32& rng_;
  double h0_ = 0.0;
  double sum_metro_ = 0.0;
  Index n_leapfrog_ = 0;
  bool divergent_ = false;
};

// Fixed-length HMC transition.
struct HmcTransition {
  PhasePoint point;
  double accept_stat = 0.0;
  bool divergent = false;
};

HmcTransition hmc_transition(const PhasePoint& current, double eps, const ChainConfig& cfg,
                             const LogDensityFn& f, Pcg32& rng) {
  PhasePoint z = current;
  for (Index i = 0; i < z.p.size(); ++i) z.p(i) = rng.normal();
  const double h0 = z.hamiltonian();
  PhasePoint prop = z;
  for (int s = 0; s < cfg.n_leapfrog; ++s) {
    step_point(prop, eps, f);
    if (!std::isfinite(prop.logp)) break;
  }
  const double h = prop.hamiltonian();
  HmcTransition t;
  t.divergent = !(h - h0 <= cfg.divergence_threshold);
  const double delta = h0 - h;
  t.accept_stat = t.divergent ? 0.0 : (delta > 0.0 ? 1.0 : std::exp(delta));
  if (!t.divergent && std::log(rng.uniform()) < delta) t.point = std::move(prop);
  else t.point = current;
  return t;
}

// Doubles or halves eps until the one-step acceptance probability crosses 1/2.
double initial_step_size(const PhasePoint& start, double eps, const LogDensityFn& f, Pcg32& rng) {
  PhasePoint z = start;
  for (Index i = 0; i < z.p.size(); ++i) z.p(i) = rng.normal();
  const double h0 = z.hamiltonian();
  auto log_accept = [&](double e) {
    PhasePoint y = z;
    step_point(y, e, f);
    const double d = h0 - y.hamiltonian();
    return std::isfinite(d) ? d : -std::numeric_limits<double>::infinity();
  };
  const double direction = log_accept(eps) > std::log(0.5) ? 1.0 : -1.0;
  for (int i = 0; i < 100; ++i) {
    const double la = log_accept(eps);
    if (direction > 0 && !(la > std::log(0.5))) break;
    if (direction < 0 && la > std::log(0.5)) break;
    eps = direction > 0 ? eps * 2.0 : eps * 0.5;
    if (eps > 1e7 || eps < 1e-10) break;
  }
  return eps;
}

// Dual averaging of log step size (Nesterov; gamma 0.05, t0 10, kappa 0.75).
class DualAveraging {
 public:
  DualAveraging(double eps0, double target) : mu_(std::log(10.0 * eps0)), target_(target) {}

  double update(double accept_stat) {
    ++count_;
    const double m = static_cast<double>(count_);
    const double w = 1.0 / (m + kT0);
    h_bar_ = (1.0 - w) * h_bar_ + w * (target_ - accept_stat);
    const double log_eps = mu_ - std::sqrt(m) / kGamma * h_bar_;
    const double eta = std::pow(m, -kKappa);
    log_eps_bar_ = eta * log_eps + (1.0 - eta) * log_eps_bar_;
    return std::exp(log_eps);
  }
  double final_step() const { return std::exp(log_eps_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double mu_;
  double target_;
  double h_bar_ = 0.0;
  double log_eps_bar_ = 0.0;
  Index count_ = 0;
};

}  // namespace

SampleSet hmc_sample(const LogDensityFn& log_target, const Vector& init, const ChainConfig& cfg) {
  cfg.validate();
  Pcg32 rng(cfg.seed, derive_seed(cfg.seed, "hmc"));
  PhasePoint current;
  current.q = init;
  current.logp = log_target(current.q, &current.grad);
  if (!std::isfinite(current.logp) || !current.grad.allFinite())
    throw SamplerFailure("log target is not finite at the initial point");
  current.p = Vector::Zero(init.size());

  double eps = initial_step_size(current, cfg.step_size, log_target, rng);
  DualAveraging adapter(eps, cfg.target_accept);
  NutsKernel nuts(log_target, cfg, rng);

  SampleSet out;
  out.draws.resize(cfg.n_samples, init.size());
  out.log_density.resize(cfg.n_samples);
  double accept_sum = 0.0;
  double depth_sum = 0.0;

  for (Index it = 0; it < cfg.warmup + cfg.n_samples; ++it) {
    double accept_stat = 0.0;
    bool divergent = false;
    int depth = 0;
    if (cfg.kind == SamplerKind::NUTS) {
      auto t = nuts.transition(current, eps);
      current = std::move(t.point);
      accept_stat = t.accept_stat;
      divergent = t.divergent;
      depth = t.depth;
    } else {
      auto t = hmc_transition(current, eps, cfg, log_target, rng);
      current = std::move(t.point);
      accept_stat = t.accept_stat;
      divergent = t.divergent;
    }
    if (it < cfg.warmup) {
      out.warmup_divergences += divergent ? 1 : 0;
      eps = adapter.update(accept_stat);
      if (it + 1 == cfg.warmup) eps = adapter.final_step();
    } else {
      const Index k = it - cfg.warmup;
      out.draws.row(k) = current.q.transpose();
      out.log_density(k) = current.logp;
      out.divergences += divergent ? 1 : 0;
      accept_sum += accept_stat;
      depth_sum += depth;
    }
  }
  if (cfg.warmup > 0 && 2 * out.warmup_divergences > cfg.warmup)
    throw SamplerFailure("more than half of the warmup transitions diverged (" +
                         std::to_string(out.warmup_divergences) + "/" + std::to_string(cfg.warmup) +
                         "); try a smaller initial step size");
  out.accept_rate = accept_sum / static_cast<double>(cfg.n_samples);
  out.mean_tree_depth = depth_sum / static_cast<double>(cfg.n_samples);
  out.step_size = eps;
  out.ess = effective_sample_size(out.draws);
  return out;
}

Vector effective_sample_size(const Matrix& draws) {
  const Index n = draws.rows();
  Vector ess(draws.cols());
  for (Index c = 0; c < draws.cols(); ++c) {
    const Vector x = draws.col(c).array() - draws.col(c).mean();
    const double var = x.squaredNorm() / static_cast<double>(n);
    if (n < 4 || !(var > 0.0)) {
      ess(c) = static_cast<double>(n);
      continue;
    }
    auto rho = [&](Index lag) {
      return x.head(n - lag).dot(x.tail(n - lag)) / (static_cast<double>(n) * var);
    };
    // Initial monotone sequence: pair sums truncated at the first non-positive
    // one and forced non-increasing.
    double tau = -1.0;  // -1 + 2 * sum of pair sums = 1 + 2 sum_{k>=1} rho_k
    double prev = std::numeric_limits<double>::infinity();
    for (Index k = 0; k + 1 < n; k += 2) {
      const double pair = std::min(prev, rho(k) + rho(k + 1));
      if (pair <= 0.0) break;
      tau += 2.0 * pair;
      prev = pair;
    }
    ess(c) = static_cast<double>(n) / std::max(tau, 1.0 / std::log10(static_cast<double>(n) + 10.0));
  }
  return ess;
}

void dump_draws(const SampleSet& samples, const std::filesystem::path& path) {
  write_dataset(Dataset(samples.draws, samples.log_density), path);
}

}  // namespace gpbnn
