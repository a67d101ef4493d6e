#pragma once

#include "gpbnn/random.hpp"
#include "gpbnn/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>

namespace gpbnn {

/// Log density up to a constant; fills `grad` when it is non-null.
using LogDensityFn = std::function<double(const Vector& x, Vector* grad)>;

enum class SamplerKind { NUTS, HMC };

struct ChainConfig {
  Index n_samples = 500;
  Index warmup = 500;
  double target_accept = 0.8;
  double step_size = 0.1;  // initial leapfrog step; refined by a doubling heuristic
  int max_tree_depth = 10;
  std::uint64_t seed = 0;
  SamplerKind kind = SamplerKind::NUTS;
  int n_leapfrog = 20;  // HMC only
  double divergence_threshold = 1000.0;

  void validate() const;
};

struct SampleSet {
  Matrix draws;              // n_samples x dim, one draw per row
  Vector log_density;        // per draw
  double accept_rate = 0.0;  // mean Metropolis acceptance statistic after warmup
  Vector ess;                // per-coordinate effective sample size
  double step_size = 0.0;    // adapted step size
  Index divergences = 0;     // post-warmup
  Index warmup_divergences = 0;
  double mean_tree_depth = 0.0;

  Index size() const { return draws.rows(); }
};

template <typename State>
struct MHStep {
  State state;
  double log_density = 0.0;
  bool accepted = false;
};

/// One Metropolis-Hastings transition with a symmetric proposal: accept the
/// proposal with probability min(1, p(x') / p(x)).
template <typename State, typename LogTarget, typename Propose>
MHStep<State> mh_transition(const State& current, double current_log_density, LogTarget&& log_target,
                            Propose&& propose, Pcg32& rng) {
  State proposal = propose(current, rng);
  const double lp = log_target(proposal);
  const double log_ratio = lp - current_log_density;
  if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) return {std::move(proposal), lp, true};
  return {current, current_log_density, false};
}

/// Random-walk Metropolis step with proposal N(current, proposal_std^2 I).
MHStep<Vector> mh_step(const Vector& current, double current_log_density,
                       const std::function<double(const Vector&)>& log_target, double proposal_std, Pcg32& rng);

struct MHConfig {
  Index n_samples = 1000;
  Index warmup = 1000;
  double proposal_std = 0.5;
  double target_accept = 0.25;
  std::uint64_t seed = 0;
};

/// Random-walk Metropolis chain; the proposal scale is adapted during warmup
/// (Robbins-Monro on its logarithm) towards the target acceptance rate.
SampleSet mh_sample(const std::function<double(const Vector&)>& log_target, const Vector& init,
                    const MHConfig& cfg, double* adapted_std = nullptr);

struct LeapfrogResult {
  Vector position;
  Vector momentum;
  bool divergent = false;
};

/// Half-kick / drift / half-kick integrator with identity mass matrix.
LeapfrogResult leapfrog(const Vector& position, const Vector& momentum, double step, int n_steps,
                        const LogDensityFn& log_target);

/// NUTS (multinomial trajectory sampling, tree doubling) or fixed-length HMC,
/// with dual-averaging step-size adaptation during warmup.
SampleSet hmc_sample(const LogDensityFn& log_target, const Vector& init, const ChainConfig& cfg);

/// Effective sample size per column (Geyer initial positive sequence).
Vector effective_sample_size(const Matrix& draws);

/// Writes draws as a dataset file: parameters as x1..xd and the log density as y.
void dump_draws(const SampleSet& samples, const std::filesystem::path& path);

}  // namespace gpbnn
