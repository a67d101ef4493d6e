#pragma once

#include "gpbnn/bnn.hpp"
#include "gpbnn/design.hpp"
#include "gpbnn/gp.hpp"
#include "gpbnn/mcmc.hpp"
#include "gpbnn/quadrature.hpp"
#include "gpbnn/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gpbnn {

enum class TransferKind { MeanStd, Quantiles, GaussHermite };

/// How the low-fidelity GP posterior enters the network input.
///   MeanStd:      (x, mu_L, sigma_L)
///   Quantiles:    (x, mu_L, Q_{alpha/2}, Q_{1-alpha/2}) with alpha = quantile_level
///   GaussHermite: (x, f_j) for each of the `order` quadrature realizations
struct TransferMethod {
  TransferKind kind = TransferKind::GaussHermite;
  double quantile_level = 0.8;
  int order = 5;

  static TransferMethod mean_std() { return {TransferKind::MeanStd, 0.8, 1}; }
  static TransferMethod quantiles(double level) { return {TransferKind::Quantiles, level, 1}; }
  static TransferMethod gauss_hermite(int order) { return {TransferKind::GaussHermite, 0.8, order}; }

  void validate() const;
  /// Number of network inputs appended to x.
  Index extra_features() const;
  std::string name() const;
};

/// f_L,j(x) = mu_L(x) + sqrt(2) z_j sd_L(x), for the zero-based node index j.
double gh_realization(const GPPosterior& low_gp, const Eigen::Ref<const Vector>& x, const GHRule& rule, Index j);

/// Network input rows (unstandardized) and their weights for one input x.
/// GaussHermite yields one row per node, visited in ascending node order so
/// that the weighted sum does not depend on how the rule is ordered.
struct FeatureBlock {
  Matrix rows;
  Vector weights;
};
FeatureBlock feature_block(const TransferMethod& transfer, const GHRule& rule, const GPPrediction& low,
                           const Eigen::Ref<const Vector>& x);

/// Training set for the network, before standardization. GaussHermite groups
/// carry `order` rows with normalized quadrature weights; the other transfers
/// use a single row of weight 1 per high-fidelity point.
BNNTrainingSet build_training_rows(const GPPosterior& low_gp, const TransferMethod& transfer,
                                   const Dataset& high_data);

/// ZScore: every feature to zero mean / unit variance over the training rows.
/// Units:  x to box coordinates, low-fidelity features by the low-fidelity
///         output mean / sd, so a near-constant sigma_L is never blown up.
enum class InputScaling { ZScore, Units };

/// Per-feature affine map (row - shift) / scale.
struct Standardizer {
  Vector shift;
  Vector scale;

  /// Zero mean, unit variance per column.
  static Standardizer fit(const Matrix& rows);
  /// x columns to box coordinates in [0, 1]; low-fidelity columns centered and
  /// scaled by the low-fidelity training outputs (sigma_L is only scaled).
  static Standardizer units(const Box& box, const GPPosterior& low_gp, const TransferMethod& transfer);
  Matrix apply(const Matrix& rows) const;
};

struct GPBNNModel {
  GPPosterior low_gp;
  TransferMethod transfer;
  GHRule rule;  // order 1 placeholder for MeanStd / Quantiles
  BNNConfig bnn_cfg;
  SampleSet posterior_draws;  // rows are flat BNNParams in the standardized frame
  Standardizer input_standardizer;
  double output_shift = 0.0;
  double output_scale = 1.0;

  Index n_draws() const { return posterior_draws.size(); }
};

struct TrainOptions {
  NuggetMode low_nugget = NuggetMode::Fixed;
  GPFitOptions gp;
  std::uint64_t gp_seed = 0;
  double init_scale = 0.1;  // sd of the random initial weights
  InputScaling input_scaling = InputScaling::Units;
  bool standardize_outputs = true;
};

/// Fits the low-fidelity GP then samples the network posterior.
GPBNNModel train(const Dataset& low_data, const Dataset& high_data, const TransferMethod& transfer,
                 BNNConfig bnn_cfg, const ChainConfig& chain_cfg, const TrainOptions& options = {});

/// Same, with an already fitted low-fidelity GP.
GPBNNModel train_with_gp(GPPosterior low_gp, const Dataset& high_data, const TransferMethod& transfer,
                         BNNConfig bnn_cfg, const ChainConfig& chain_cfg, const TrainOptions& options = {});

struct PredictionSummary {
  double mean = 0.0;
  double variance = 0.0;
  double raw_variance = 0.0;  // before clamping at zero
  double lo = 0.0;
  double hi = 0.0;
  Index n_draws = 0;
};

/// Weighted network output of every posterior draw at x (original output units).
Vector draw_outputs(const GPBNNModel& model, const Eigen::Ref<const Vector>& x);

/// draw_outputs for every row of x: an M x N_v matrix.
Matrix draw_outputs_batch(const GPBNNModel& model, const Matrix& x);

/// Posterior noise scale of every draw (original output units).
Vector draw_sigmas(const GPBNNModel& model);

/// Mean and variance from the draw outputs; the interval is left empty.
PredictionSummary predict(const GPBNNModel& model, const Eigen::Ref<const Vector>& x);

/// Shortest window over sorted realizations y_i = m_i + sigma_i eps_i that
/// contains ceil(level N_v) of them. eps_i is fixed by (x, seed).
std::pair<double, double> predict_interval(const GPBNNModel& model, const Eigen::Ref<const Vector>& x,
                                           double level, std::uint64_t seed);

/// predict + predict_interval in one pass.
PredictionSummary predict_full(const GPBNNModel& model, const Eigen::Ref<const Vector>& x, double level,
                               std::uint64_t seed);

/// predict_full for every row of x.
std::vector<PredictionSummary> predict_batch(const GPBNNModel& model, const Matrix& x, double level,
                                             std::uint64_t seed);

/// Shortest window containing ceil(level * n) of the values; leftmost on ties.
std::pair<double, double> shortest_interval(Vector values, double level);

/// Mean/variance estimators from per-draw outputs and noise scales.
PredictionSummary summarize_draws(const Vector& outputs, const Vector& sigmas);

/// Standard normal variates for the interval realizations at x.
Vector interval_noise(const Eigen::Ref<const Vector>& x, Index n, std::uint64_t seed);

}  // namespace gpbnn
