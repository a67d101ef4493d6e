#include "gpbnn/gpbnn.hpp"

#include "gpbnn/random.hpp"
#include "gpbnn/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>

namespace gpbnn {

void TransferMethod::validate() const {
  switch (kind) {
    case TransferKind::MeanStd:
      return;
    case TransferKind::Quantiles:
      if (!(quantile_level > 0.0 && quantile_level < 1.0))
        throw InvalidArgument("Quantiles transfer needs a level in (0, 1)");
      return;
    case TransferKind::GaussHermite:
      if (order < 1 || order > kMaxGHOrder) throw InvalidArgument("Gauss-Hermite order out of range");
      return;
  }
}

Index TransferMethod::extra_features() const {
  switch (kind) {
    case TransferKind::MeanStd: return 2;
    case TransferKind::Quantiles: return 3;
    case TransferKind::GaussHermite: return 1;
  }
  return 0;
}

std::string TransferMethod::name() const {
  switch (kind) {
    case TransferKind::MeanStd: return "mean_std";
    case TransferKind::Quantiles: return "quantiles";
    case TransferKind::GaussHermite: return "gauss_hermite";
  }
  return "";
}

double gh_realization(const GPPosterior& low_gp, const Eigen::Ref<const Vector>& x, const GHRule& rule, Index j) {
  if (j < 0 || j >= rule.order) throw InvalidArgument("Gauss-Hermite node index out of range");
  const GPPrediction p = low_gp.predict(x);
  return p.mean + std::numbers::sqrt2 * rule.nodes(j) * p.sd();
}

FeatureBlock feature_block(const TransferMethod& transfer, const GHRule& rule, const GPPrediction& low,
                           const Eigen::Ref<const Vector>& x) {
  const Index d = x.size();
  const Index width = d + transfer.extra_features();
  const double sd = low.sd();
  FeatureBlock block;
  if (transfer.kind == TransferKind::GaussHermite) {
    const Index s = rule.order;
    std::vector<Index> order(static_cast<std::size_t>(s));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return rule.nodes(a) < rule.nodes(b); });
    block.rows.resize(s, width);
    block.weights.resize(s);
    for (Index r = 0; r < s; ++r) {
      const Index j = order[static_cast<std::size_t>(r)];
      block.rows.row(r).head(d) = x.transpose();
      block.rows(r, d) = low.mean + std::numbers::sqrt2 * rule.nodes(j) * sd;
      block.weights(r) = rule.normalized_weights(j);
    }
    return block;
  }
  block.rows.resize(1, width);
  block.rows.row(0).head(d) = x.transpose();
  block.rows(0, d) = low.mean;
  if (transfer.kind == TransferKind::MeanStd) {
    block.rows(0, d + 1) = sd;
  } else {
    const double tail = 0.5 * (1.0 - transfer.quantile_level);
    block.rows(0, d + 1) = low.mean + normal_quantile(tail) * sd;
    block.rows(0, d + 2) = low.mean + normal_quantile(1.0 - tail) * sd;
  }
  block.weights = Vector::Ones(1);
  return block;
}

namespace {

const GHRule& rule_for(const TransferMethod& transfer) {
  return cached_gh_rule(transfer.kind == TransferKind::GaussHermite ? transfer.order : 1);
}

}  // namespace

BNNTrainingSet build_training_rows(const GPPosterior& low_gp, const TransferMethod& transfer,
                                   const Dataset& high_data) {
  transfer.validate();
  if (high_data.dim() != low_gp.dim()) throw InvalidArgument("high-fidelity data dimension does not match the GP");
  const GHRule& rule = rule_for(transfer);
  const Index n = high_data.size();
  const Index k = transfer.kind == TransferKind::GaussHermite ? transfer.order : 1;
  const Index width = high_data.dim() + transfer.extra_features();

  Vector mu;
  Vector var;
  low_gp.predict(high_data.inputs, mu, var);

  BNNTrainingSet t;
  t.inputs.resize(n * k, width);
  t.row_weights.resize(n * k);
  t.targets = high_data.outputs;
  t.group_start.resize(static_cast<std::size_t>(n) + 1);
  for (Index i = 0; i < n; ++i) {
    const FeatureBlock b =
        feature_block(transfer, rule, {mu(i), var(i)}, high_data.inputs.row(i).transpose());
    t.inputs.middleRows(i * k, k) = b.rows;
    t.row_weights.segment(i * k, k) = b.weights;
    t.group_start[static_cast<std::size_t>(i)] = i * k;
  }
  t.group_start.back() = n * k;
  t.validate();
  return t;
}

Standardizer Standardizer::fit(const Matrix& rows) {
  Standardizer s;
  s.shift = rows.colwise().mean().transpose();
  s.scale = Vector::Ones(rows.cols());
  for (Index c = 0; c < rows.cols(); ++c) {
    const double v = (rows.col(c).array() - s.shift(c)).square().mean();
    if (v > 1e-24) s.scale(c) = std::sqrt(v);
  }
  return s;
}

Standardizer Standardizer::units(const Box& box, const GPPosterior& low_gp, const TransferMethod& transfer) {
  const Index d = box.dim();
  const Vector& y = low_gp.train_outputs();
  const double shift = y.mean();
  const double sd = std::sqrt((y.array() - shift).square().mean());
  const double scale = sd > 1e-12 ? sd : 1.0;
  Standardizer s;
  s.shift = Vector::Constant(d + transfer.extra_features(), shift);
  s.scale = Vector::Constant(d + transfer.extra_features(), scale);
  s.shift.head(d) = box.lo;
  s.scale.head(d) = box.width();
  if (transfer.kind == TransferKind::MeanStd) s.shift(d + 1) = 0.0;
  return s;
}

Matrix Standardizer::apply(const Matrix& rows) const {
  return ((rows.rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

GPBNNModel train(const Dataset& low_data, const Dataset& high_data, const TransferMethod& transfer,
                 BNNConfig bnn_cfg, const ChainConfig& chain_cfg, const TrainOptions& options) {
  if (low_data.dim() != high_data.dim()) throw InvalidArgument("low and high fidelity data differ in dimension");
  GPPosterior low_gp = fit_gp(low_data, options.low_nugget, options.gp_seed, options.gp);
  return train_with_gp(std::move(low_gp), high_data, transfer, bnn_cfg, chain_cfg, options);
}

GPBNNModel train_with_gp(GPPosterior low_gp, const Dataset& high_data, const TransferMethod& transfer,
                         BNNConfig bnn_cfg, const ChainConfig& chain_cfg, const TrainOptions& options) {
  transfer.validate();
  chain_cfg.validate();
  if (high_data.size() < 2) throw InvalidArgument("GPBNN training needs at least two high-fidelity points");

  GPBNNModel model;
  model.transfer = transfer;
  model.rule = rule_for(transfer);
  bnn_cfg.input_dim = high_data.dim() + transfer.extra_features();
  bnn_cfg.validate();
  model.bnn_cfg = bnn_cfg;

  BNNTrainingSet rows = build_training_rows(low_gp, transfer, high_data);
  model.input_standardizer = options.input_scaling == InputScaling::Units
                                 ? Standardizer::units(high_data.box, low_gp, transfer)
                                 : Standardizer::fit(rows.inputs);
  rows.inputs = model.input_standardizer.apply(rows.inputs);
  if (options.standardize_outputs) {
    model.output_shift = rows.targets.mean();
    const double sd = std::sqrt((rows.targets.array() - model.output_shift).square().mean());
    model.output_scale = sd > 1e-12 ? sd : 1.0;
  }
  rows.targets = (rows.targets.array() - model.output_shift) / model.output_scale;
  model.low_gp = std::move(low_gp);

  BNNPosterior posterior(rows, bnn_cfg);
  const LogDensityFn target = [&posterior](const Vector& flat, Vector* grad) { return posterior(flat, grad); };

  Pcg32 rng(derive_seed(chain_cfg.seed, "bnn/init"));
  Vector init(bnn_cfg.parameter_count());
  for (Index i = 0; i < init.size(); ++i) init(i) = options.init_scale * rng.normal();
  init(init.size() - 1) = std::log(0.5);

  model.posterior_draws = hmc_sample(target, init, chain_cfg);
  return model;
}

Matrix draw_outputs_batch(const GPBNNModel& model, const Matrix& x) {
  if (x.cols() != model.low_gp.dim()) throw InvalidArgument("prediction input has wrong dimension");
  const Index n = x.rows();
  const Index k = model.transfer.kind == TransferKind::GaussHermite ? model.rule.order : 1;
  Vector mu;
  Vector var;
  model.low_gp.predict(x, mu, var);

  Matrix rows(n * k, model.bnn_cfg.input_dim);
  Vector weights(k);
  for (Index i = 0; i < n; ++i) {
    const FeatureBlock b = feature_block(model.transfer, model.rule, {mu(i), var(i)}, x.row(i).transpose());
    rows.middleRows(i * k, k) = b.rows;
    weights = b.weights;
  }
  rows = model.input_standardizer.apply(rows);

  const Index nv = model.n_draws();
  Matrix out(n, nv);
  for (Index s = 0; s < nv; ++s) {
    const BNNParams params = BNNParams::unflatten(model.posterior_draws.draws.row(s).transpose(), model.bnn_cfg);
    const Vector o = bnn_forward_batch(params, rows, model.bnn_cfg.activation);
    for (Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Index j = 0; j < k; ++j) acc += weights(j) * o(i * k + j);
      out(i, s) = model.output_shift + model.output_scale * acc;
    }
  }
  return out;
}

Vector draw_outputs(const GPBNNModel& model, const Eigen::Ref<const Vector>& x) {
  const Matrix one = x.transpose();
  return draw_outputs_batch(model, one).row(0).transpose();
}

Vector draw_sigmas(const GPBNNModel& model) {
  const Index last = model.bnn_cfg.parameter_count() - 1;
  return model.output_scale * model.posterior_draws.draws.col(last).array().exp();
}

PredictionSummary summarize_draws(const Vector& outputs, const Vector& sigmas) {
  if (outputs.size() == 0 || outputs.size() != sigmas.size())
    throw InvalidArgument("draw outputs and noise scales must be non-empty and of equal length");
  const double n = static_cast<double>(outputs.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  double noise = 0.0;
  for (Index i = 0; i < outputs.size(); ++i) {
    sum += outputs(i);
    sum_sq += outputs(i) * outputs(i);
    noise += sigmas(i) * sigmas(i);
  }
  PredictionSummary p;
  p.mean = sum / n;
  p.raw_variance = sum_sq / n + noise / n - p.mean * p.mean;
  p.variance = std::max(0.0, p.raw_variance);
  p.n_draws = outputs.size();
  p.lo = p.hi = p.mean;
  return p;
}

std::pair<double, double> shortest_interval(Vector values, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("interval level must lie in (0, 1)");
  const Index n = values.size();
  if (level * static_cast<double>(n) < 2.0 - 1e-12)
    throw InvalidArgument("interval needs level * n_draws >= 2");
  std::sort(values.begin(), values.end());
  const auto k = static_cast<Index>(std::ceil(level * static_cast<double>(n) - 1e-9));
  Index best = 0;
  double best_width = values(k - 1) - values(0);
  for (Index i = 1; i + k <= n; ++i) {
    const double w = values(i + k - 1) - values(i);
    if (w < best_width) {
      best_width = w;
      best = i;
    }
  }
  return {values(best), values(best + k - 1)};
}

Vector interval_noise(const Eigen::Ref<const Vector>& x, Index n, std::uint64_t seed) {
  std::uint64_t h = derive_seed(seed, "interval");
  for (Index i = 0; i < x.size(); ++i) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(x(i)));
  Vector eps(n);
  for (Index i = 0; i < n; ++i) eps(i) = counter_normal(h, static_cast<std::uint64_t>(i));
  return eps;
}

namespace {

PredictionSummary summarize_point(const Vector& outputs, const Vector& sigmas, const Eigen::Ref<const Vector>& x,
                                  double level, std::uint64_t seed) {
  PredictionSummary p = summarize_draws(outputs, sigmas);
  const Vector eps = interval_noise(x, outputs.size(), seed);
  const auto [lo, hi] = shortest_interval(outputs + sigmas.cwiseProduct(eps), level);
  p.lo = lo;
  p.hi = hi;
  return p;
}

}  // namespace

PredictionSummary predict(const GPBNNModel& model, const Eigen::Ref<const Vector>& x) {
  return summarize_draws(draw_outputs(model, x), draw_sigmas(model));
}

std::pair<double, double> predict_interval(const GPBNNModel& model, const Eigen::Ref<const Vector>& x,
                                           double level, std::uint64_t seed) {
  const PredictionSummary p = predict_full(model, x, level, seed);
  return {p.lo, p.hi};
}

PredictionSummary predict_full(const GPBNNModel& model, const Eigen::Ref<const Vector>& x, double level,
                               std::uint64_t seed) {
  return summarize_point(draw_outputs(model, x), draw_sigmas(model), x, level, seed);
}

std::vector<PredictionSummary> predict_batch(const GPBNNModel& model, const Matrix& x, double level,
                                             std::uint64_t seed) {
  const Matrix outputs = draw_outputs_batch(model, x);
  const Vector sigmas = draw_sigmas(model);
  std::vector<PredictionSummary> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i)
    out.push_back(summarize_point(outputs.row(i).transpose(), sigmas, x.row(i).transpose(), level, seed));
  return out;
}

}  // namespace gpbnn
