#include "gpbnn/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>

namespace gpbnn {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidArgument("matrix must be a JSON array of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw InvalidArgument("ragged matrix in JSON");
    for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Json vector_to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

Json to_json(const KernelConfig& k) {
  return {{"variance", k.variance},
          {"lengthscales", vector_to_json(k.lengthscales)},
          {"nugget", k.nugget},
          {"nugget_mode", k.nugget_mode == NuggetMode::Fixed ? "fixed" : "estimated"}};
}

KernelConfig kernel_from_json(const Json& j) {
  KernelConfig k;
  k.variance = j.at("variance").get<double>();
  k.lengthscales = vector_from_json(j.at("lengthscales"));
  k.nugget = j.at("nugget").get<double>();
  k.nugget_mode = j.value("nugget_mode", "fixed") == "estimated" ? NuggetMode::Estimated : NuggetMode::Fixed;
  return k;
}

Json to_json(const GPPosterior& gp) {
  return {{"kernel", to_json(gp.kernel())},
          {"output_shift", gp.output_shift()},
          {"train_inputs", matrix_to_json(gp.train_inputs())},
          {"train_outputs", vector_to_json(gp.train_outputs())}};
}

GPPosterior gp_from_json(const Json& j) {
  return GPPosterior(kernel_from_json(j.at("kernel")), matrix_from_json(j.at("train_inputs")),
                     vector_from_json(j.at("train_outputs")), j.at("output_shift").get<double>());
}

Json to_json(const TransferMethod& t) {
  Json j{{"kind", t.name()}};
  if (t.kind == TransferKind::Quantiles) j["level"] = t.quantile_level;
  if (t.kind == TransferKind::GaussHermite) j["order"] = t.order;
  return j;
}

TransferMethod transfer_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  TransferMethod t;
  if (kind == "mean_std") t = TransferMethod::mean_std();
  else if (kind == "quantiles") t = TransferMethod::quantiles(j.value("level", 0.8));
  else if (kind == "gauss_hermite") t = TransferMethod::gauss_hermite(j.value("order", 5));
  else throw InvalidArgument("unknown transfer kind '" + kind + "'");
  t.validate();
  return t;
}

Json to_json(const BNNConfig& c) {
  return {{"input_dim", c.input_dim},
          {"hidden", c.hidden},
          {"activation", c.activation == Activation::ReLU ? "relu" : "tanh"},
          {"prior_std_w1", c.prior_std_w1},
          {"prior_std_b1", c.prior_std_b1},
          {"prior_std_w2", c.prior_std_w2},
          {"prior_std_b2", c.prior_std_b2},
          {"noise_prior", c.noise_prior}};
}

BNNConfig bnn_config_from_json(const Json& j, BNNConfig c) {
  c.input_dim = j.value("input_dim", c.input_dim);
  c.hidden = j.value("hidden", c.hidden);
  if (j.contains("activation")) {
    const std::string a = j.at("activation").get<std::string>();
    if (a == "relu") c.activation = Activation::ReLU;
    else if (a == "tanh") c.activation = Activation::Tanh;
    else throw InvalidArgument("unknown activation '" + a + "'");
  }
  c.prior_std_w1 = j.value("prior_std_w1", c.prior_std_w1);
  c.prior_std_b1 = j.value("prior_std_b1", c.prior_std_b1);
  c.prior_std_w2 = j.value("prior_std_w2", c.prior_std_w2);
  c.prior_std_b2 = j.value("prior_std_b2", c.prior_std_b2);
  c.noise_prior = j.value("noise_prior", c.noise_prior);
  return c;
}

Json to_json(const ChainConfig& c) {
  return {{"n_samples", c.n_samples},
          {"warmup", c.warmup},
          {"target_accept", c.target_accept},
          {"step_size", c.step_size},
          {"max_tree_depth", c.max_tree_depth},
          {"seed", c.seed},
          {"kind", c.kind == SamplerKind::NUTS ? "nuts" : "hmc"},
          {"n_leapfrog", c.n_leapfrog},
          {"divergence_threshold", c.divergence_threshold}};
}

ChainConfig chain_config_from_json(const Json& j, ChainConfig c) {
  c.n_samples = j.value("n_samples", c.n_samples);
  c.warmup = j.value("warmup", c.warmup);
  c.target_accept = j.value("target_accept", c.target_accept);
  c.step_size = j.value("step_size", c.step_size);
  c.max_tree_depth = j.value("max_tree_depth", c.max_tree_depth);
  c.seed = j.value("seed", c.seed);
  if (j.contains("kind")) {
    const std::string k = j.at("kind").get<std::string>();
    if (k == "nuts") c.kind = SamplerKind::NUTS;
    else if (k == "hmc") c.kind = SamplerKind::HMC;
    else throw InvalidArgument("unknown sampler kind '" + k + "'");
  }
  c.n_leapfrog = j.value("n_leapfrog", c.n_leapfrog);
  c.divergence_threshold = j.value("divergence_threshold", c.divergence_threshold);
  c.validate();
  return c;
}

namespace {

std::string level_key(double level) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, level);
  return std::string(buf, res.ptr);
}

}  // namespace

Json to_json(const EvalReport& r) {
  Json cp = Json::object();
  Json width = Json::object();
  for (const auto& [level, v] : r.cp) cp[level_key(level)] = v;
  for (const auto& [level, v] : r.mpiw) width[level_key(level)] = v;
  return {{"q2", r.q2}, {"cp", cp}, {"mpiw", width}, {"n_test", r.n_test}};
}

Json to_json(const GPBNNModel& model) {
  const SampleSet& s = model.posterior_draws;
  return {{"low_gp", to_json(model.low_gp)},
          {"transfer", to_json(model.transfer)},
          {"bnn", to_json(model.bnn_cfg)},
          {"input_shift", vector_to_json(model.input_standardizer.shift)},
          {"input_scale", vector_to_json(model.input_standardizer.scale)},
          {"output_shift", model.output_shift},
          {"output_scale", model.output_scale},
          {"sampler",
           {{"accept_rate", s.accept_rate},
            {"step_size", s.step_size},
            {"divergences", s.divergences},
            {"warmup_divergences", s.warmup_divergences},
            {"mean_tree_depth", s.mean_tree_depth}}},
          {"draws", matrix_to_json(s.draws)},
          {"log_density", vector_to_json(s.log_density)}};
}

GPBNNModel model_from_json(const Json& j) {
  GPBNNModel model;
  model.low_gp = gp_from_json(j.at("low_gp"));
  model.transfer = transfer_from_json(j.at("transfer"));
  model.rule = cached_gh_rule(model.transfer.kind == TransferKind::GaussHermite ? model.transfer.order : 1);
  model.bnn_cfg = bnn_config_from_json(j.at("bnn"));
  model.bnn_cfg.validate();
  model.input_standardizer.shift = vector_from_json(j.at("input_shift"));
  model.input_standardizer.scale = vector_from_json(j.at("input_scale"));
  model.output_shift = j.at("output_shift").get<double>();
  model.output_scale = j.at("output_scale").get<double>();
  SampleSet& s = model.posterior_draws;
  s.draws = matrix_from_json(j.at("draws"));
  s.log_density = vector_from_json(j.at("log_density"));
  const Json& diag = j.at("sampler");
  s.accept_rate = diag.value("accept_rate", 0.0);
  s.step_size = diag.value("step_size", 0.0);
  s.divergences = diag.value("divergences", Index{0});
  s.warmup_divergences = diag.value("warmup_divergences", Index{0});
  s.mean_tree_depth = diag.value("mean_tree_depth", 0.0);
  if (s.draws.rows() < 1 || s.draws.cols() != model.bnn_cfg.parameter_count())
    throw InvalidArgument("model draws do not match the network configuration");
  if (model.input_standardizer.shift.size() != model.bnn_cfg.input_dim)
    throw InvalidArgument("model input scaling does not match the network configuration");
  s.ess = effective_sample_size(s.draws);
  return model;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t upto = std::min(e.byte, text.size());
    const auto line = static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n')) + 1;
    throw ParseError(path.string() + ": " + e.what(), line);
  }
}

void write_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace gpbnn
