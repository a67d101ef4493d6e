#include "gpbnn/experiment.hpp"

#include "gpbnn/random.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace gpbnn {

std::string benchmark_name(Benchmark b) {
  switch (b) {
    case Benchmark::OneD: return "oned";
    case Benchmark::Currin: return "currin";
    case Benchmark::Pendulum: return "pendulum";
  }
  return "";
}

std::string method_name(Method m) { return m == Method::GP1F ? "gp1f" : "gpbnn"; }

ExperimentConfig ExperimentConfig::defaults(Benchmark b) {
  ExperimentConfig cfg;
  cfg.benchmark = b;
  switch (b) {
    case Benchmark::OneD:
      cfg.n_low = 100;
      cfg.n_high = 20;
      cfg.n_test = 1000;
      cfg.bnn.hidden = 30;
      break;
    case Benchmark::Currin:
      cfg.n_low = 25;
      cfg.n_high = 15;
      cfg.n_test = 1000;
      cfg.bnn.hidden = 40;
      cfg.low_nugget = NuggetMode::Estimated;
      break;
    case Benchmark::Pendulum:
      cfg.n_low = 100;
      cfg.n_high = 20;
      cfg.n_test = 64;
      cfg.bnn.hidden = 30;
      break;
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  if (n_test < 2) throw InvalidArgument("n_test must be at least 2");
  if (n_high < 2) throw InvalidArgument("n_high must be at least 2");
  if (method == Method::GPBNN && n_low < 1) throw InvalidArgument("n_low must be at least 1");
  if (replications < 1) throw InvalidArgument("replications must be at least 1");
  if (levels.empty()) throw InvalidArgument("at least one interval level is required");
  for (const double a : levels)
    if (!(a > 0.0 && a < 1.0)) throw InvalidArgument("interval levels must lie in (0, 1)");
  if (!excluded.empty() && benchmark != Benchmark::OneD)
    throw InvalidArgument("excluded segments apply to the oned benchmark only");
  if (sweep) {
    if (sweep->parameter != "S" && sweep->parameter != "N_v")
      throw InvalidArgument("sweep parameter must be S or N_v");
    if (sweep->values.empty()) throw InvalidArgument("sweep needs at least one value");
    for (const double v : sweep->values)
      if (!(v >= 1.0) || v != std::floor(v)) throw InvalidArgument("sweep values must be positive integers");
  }
  transfer.validate();
  chain.validate();
}

namespace {

Benchmark parse_benchmark(const std::string& s) {
  if (s == "oned") return Benchmark::OneD;
  if (s == "currin") return Benchmark::Currin;
  if (s == "pendulum") return Benchmark::Pendulum;
  throw InvalidArgument("unknown benchmark '" + s + "'");
}

Method parse_method(const std::string& s) {
  if (s == "gpbnn") return Method::GPBNN;
  if (s == "gp1f") return Method::GP1F;
  throw InvalidArgument("unknown method '" + s + "'");
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig cfg = ExperimentConfig::defaults(parse_benchmark(j.value("benchmark", std::string("oned"))));
  if (j.contains("method")) cfg.method = parse_method(j.at("method").get<std::string>());
  if (j.contains("transfer")) cfg.transfer = transfer_from_json(j.at("transfer"));
  if (j.contains("excluded"))
    for (const Json& seg : j.at("excluded")) cfg.excluded.push_back({seg.at(0).get<double>(), seg.at(1).get<double>()});
  cfg.n_low = j.value("n_low", cfg.n_low);
  cfg.n_high = j.value("n_high", cfg.n_high);
  cfg.n_test = j.value("n_test", cfg.n_test);
  if (j.contains("levels")) cfg.levels = j.at("levels").get<std::vector<double>>();
  if (j.contains("sweep"))
    cfg.sweep = SweepSpec{j.at("sweep").at("parameter").get<std::string>(),
                          j.at("sweep").at("values").get<std::vector<double>>()};
  cfg.replications = j.value("replications", cfg.replications);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("bnn")) cfg.bnn = bnn_config_from_json(j.at("bnn"), cfg.bnn);
  if (j.contains("chain")) cfg.chain = chain_config_from_json(j.at("chain"), cfg.chain);
  if (j.contains("low_nugget"))
    cfg.low_nugget = j.at("low_nugget").get<std::string>() == "estimated" ? NuggetMode::Estimated : NuggetMode::Fixed;
  if (j.contains("input_scaling"))
    cfg.input_scaling = j.at("input_scaling").get<std::string>() == "zscore" ? InputScaling::ZScore : InputScaling::Units;
  cfg.lhs_restarts = j.value("lhs_restarts", cfg.lhs_restarts);
  if (j.contains("currin")) {
    cfg.currin_delta = j.at("currin").value("delta", cfg.currin_delta);
    cfg.currin_noise_variance = j.at("currin").value("noise_variance", cfg.currin_noise_variance);
  }
  if (j.contains("pendulum")) cfg.pendulum_dt = j.at("pendulum").value("dt", cfg.pendulum_dt);
  cfg.validate();
  return cfg;
}

Json to_json(const ExperimentConfig& cfg) {
  Json excluded = Json::array();
  for (const Interval& seg : cfg.excluded) excluded.push_back({seg.lo, seg.hi});
  Json j{{"benchmark", benchmark_name(cfg.benchmark)},
         {"method", method_name(cfg.method)},
         {"transfer", to_json(cfg.transfer)},
         {"excluded", excluded},
         {"n_low", cfg.n_low},
         {"n_high", cfg.n_high},
         {"n_test", cfg.n_test},
         {"levels", cfg.levels},
         {"replications", cfg.replications},
         {"seed", cfg.seed},
         {"bnn", to_json(cfg.bnn)},
         {"chain", to_json(cfg.chain)},
         {"low_nugget", cfg.low_nugget == NuggetMode::Fixed ? "fixed" : "estimated"},
         {"input_scaling", cfg.input_scaling == InputScaling::Units ? "units" : "zscore"},
         {"lhs_restarts", cfg.lhs_restarts},
         {"currin", {{"delta", cfg.currin_delta}, {"noise_variance", cfg.currin_noise_variance}}},
         {"pendulum", {{"dt", cfg.pendulum_dt}}}};
  if (cfg.sweep) j["sweep"] = {{"parameter", cfg.sweep->parameter}, {"values", cfg.sweep->values}};
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return config_from_json(read_json(path)); }

std::uint64_t replication_seed(const ExperimentConfig& cfg, const char* label, int replication) {
  return derive_seed(cfg.seed, label, static_cast<std::uint64_t>(replication));
}

namespace {

CodePair make_pair(const ExperimentConfig& cfg, int replication) {
  switch (cfg.benchmark) {
    case Benchmark::OneD: return pair_1d();
    case Benchmark::Currin:
      return pair_currin(cfg.currin_delta, std::sqrt(cfg.currin_noise_variance),
                         replication_seed(cfg, "noise", replication));
    case Benchmark::Pendulum: return pair_pendulum(cfg.pendulum_dt);
  }
  throw InvalidArgument("unknown benchmark");
}

Matrix learning_design(const ExperimentConfig& cfg, const CodePair& pair, Index n, bool low, int replication) {
  const std::uint64_t seed = replication_seed(cfg, low ? "design/low" : "design/high", replication);
  if (cfg.benchmark == Benchmark::OneD) {
    const Interval domain{pair.box.lo(0), pair.box.hi(0)};
    return stratified_1d(n, domain, low ? cfg.excluded : std::vector<Interval>{}, seed);
  }
  return maximin_lhs(n, pair.d, pair.box, seed, cfg.lhs_restarts);
}

EvalReport make_report(const Vector& mean, const Vector& truth, const std::vector<IntervalList>& intervals,
                       const std::vector<double>& levels) {
  EvalReport r;
  r.q2 = q2(mean, truth);
  r.n_test = truth.size();
  for (std::size_t k = 0; k < levels.size(); ++k) {
    r.cp[levels[k]] = coverage(intervals[k], truth);
    r.mpiw[levels[k]] = mpiw(intervals[k]);
  }
  return r;
}

}  // namespace

ModelEvaluation evaluate_model(const GPBNNModel& model, const Dataset& test, const std::vector<double>& levels,
                               std::uint64_t interval_seed) {
  if (levels.empty()) throw InvalidArgument("at least one interval level is required");
  const Matrix outputs = draw_outputs_batch(model, test.inputs);
  const Vector sigmas = draw_sigmas(model);
  ModelEvaluation ev;
  std::vector<IntervalList> intervals(levels.size());
  Vector mean(test.size());
  for (Index i = 0; i < test.size(); ++i) {
    const Vector out = outputs.row(i).transpose();
    const Vector x = test.inputs.row(i).transpose();
    PredictionSummary p = summarize_draws(out, sigmas);
    const Vector y = out + sigmas.cwiseProduct(interval_noise(x, out.size(), interval_seed));
    for (std::size_t k = 0; k < levels.size(); ++k) {
      const auto iv = shortest_interval(y, levels[k]);
      intervals[k].push_back(iv);
      if (k == 0) std::tie(p.lo, p.hi) = iv;
    }
    mean(i) = p.mean;
    ev.predictions.push_back(p);
  }
  ev.report = make_report(mean, test.outputs, intervals, levels);
  return ev;
}

ReplicationData generate_data(const ExperimentConfig& cfg, int replication, bool with_low) {
  const CodePair pair = make_pair(cfg, replication);
  ReplicationData data;
  const Matrix xh = learning_design(cfg, pair, cfg.n_high, false, replication);
  data.high = Dataset(xh, evaluate_high(pair, xh), pair.box);
  const Matrix xt = uniform_random(cfg.n_test, pair.box, replication_seed(cfg, "design/test", replication));
  data.test = Dataset(xt, evaluate_high(pair, xt), pair.box);
  if (with_low) {
    const Matrix xl = learning_design(cfg, pair, cfg.n_low, true, replication);
    data.low = Dataset(xl, evaluate_low(pair, xl), pair.box);
  }
  return data;
}

GPBNNModel fit_model(const ExperimentConfig& cfg, const Dataset& low, const Dataset& high, int replication) {
  TrainOptions opt;
  opt.low_nugget = cfg.low_nugget;
  opt.gp_seed = replication_seed(cfg, "gp/low", replication);
  opt.input_scaling = cfg.input_scaling;
  ChainConfig chain = cfg.chain;
  chain.seed = replication_seed(cfg, "mcmc", replication);
  return train(low, high, cfg.transfer, cfg.bnn, chain, opt);
}

ReplicationResult run_replication(const ExperimentConfig& cfg, int replication) {
  const auto start = std::chrono::steady_clock::now();
  const bool multi = cfg.method == Method::GPBNN;
  const ReplicationData data = generate_data(cfg, replication, multi);
  ReplicationResult rep;
  rep.replication = replication;
  rep.test_inputs = data.test.inputs;
  rep.truth = data.test.outputs;
  std::vector<IntervalList> intervals(cfg.levels.size());

  if (!multi) {
    const GPPosterior gp = fit_gp(data.high, NuggetMode::Fixed, replication_seed(cfg, "gp/high", replication));
    Vector var;
    gp.predict(rep.test_inputs, rep.mean, var);
    for (std::size_t k = 0; k < cfg.levels.size(); ++k) intervals[k] = gaussian_intervals(rep.mean, var, cfg.levels[k]);
    rep.report = make_report(rep.mean, rep.truth, intervals, cfg.levels);
  } else {
    const GPBNNModel model = fit_model(cfg, data.low, data.high, replication);

    const CodePair pair = make_pair(cfg, replication);
    const Vector low_truth = evaluate_low(pair, rep.test_inputs, static_cast<std::uint64_t>(cfg.n_low));
    Vector low_mean;
    Vector low_var;
    model.low_gp.predict(rep.test_inputs, low_mean, low_var);
    rep.low_q2 = q2(low_mean, low_truth);

    const ModelEvaluation ev =
        evaluate_model(model, data.test, cfg.levels, replication_seed(cfg, "interval-noise", replication));
    rep.report = ev.report;
    rep.mean.resize(cfg.n_test);
    for (Index i = 0; i < cfg.n_test; ++i) rep.mean(i) = ev.predictions[static_cast<std::size_t>(i)].mean;
    rep.accept_rate = model.posterior_draws.accept_rate;
    rep.divergences = model.posterior_draws.divergences;
    intervals[0].clear();
    for (const PredictionSummary& p : ev.predictions) intervals[0].push_back({p.lo, p.hi});
  }

  rep.lo.resize(cfg.n_test);
  rep.hi.resize(cfg.n_test);
  for (Index i = 0; i < cfg.n_test; ++i) std::tie(rep.lo(i), rep.hi(i)) = intervals[0][static_cast<std::size_t>(i)];
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  ExperimentResult result;
  result.config = cfg;
  result.replications.resize(static_cast<std::size_t>(cfg.replications));
  std::vector<std::exception_ptr> errors(result.replications.size());
  std::atomic<int> next{0};

  auto worker = [&] {
    for (int r = next++; r < cfg.replications; r = next++) {
      try {
        result.replications[static_cast<std::size_t>(r)] = run_replication(cfg, r);
      } catch (...) {
        errors[static_cast<std::size_t>(r)] = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min(threads, cfg.replications));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t r = 0; r < errors.size(); ++r) {
    if (!errors[r]) continue;
    try {
      std::rethrow_exception(errors[r]);
    } catch (const std::exception& e) {
      throw Error("replication " + std::to_string(r) + ": " + e.what());
    }
  }

  std::vector<EvalReport> reports;
  for (const ReplicationResult& rep : result.replications) {
    reports.push_back(rep.report);
    result.mean_low_q2 += rep.low_q2 / static_cast<double>(cfg.replications);
  }
  result.mean = average_reports(reports);
  return result;
}

std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& cfg) {
  if (!cfg.sweep) return {cfg};
  std::vector<ExperimentConfig> out;
  for (const double v : cfg.sweep->values) {
    ExperimentConfig c = cfg;
    c.sweep.reset();
    if (cfg.sweep->parameter == "S") {
      c.transfer = TransferMethod::gauss_hermite(static_cast<int>(v));
    } else {
      c.chain.n_samples = static_cast<Index>(v);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<ExperimentResult> run_sweep(const ExperimentConfig& cfg, int threads) {
  std::vector<ExperimentResult> out;
  for (const ExperimentConfig& c : expand_sweep(cfg)) out.push_back(run_experiment(c, threads));
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string level_tag(double level) { return std::to_string(static_cast<int>(std::lround(level * 100.0))); }

std::string row_prefix(const ExperimentConfig& cfg) {
  std::string s = benchmark_name(cfg.benchmark) + "," + method_name(cfg.method) + ",";
  if (cfg.method == Method::GP1F) return s + "none,,";
  s += cfg.transfer.name() + ",";
  if (cfg.transfer.kind == TransferKind::GaussHermite) s += std::to_string(cfg.transfer.order);
  return s + "," + std::to_string(cfg.chain.n_samples);
}

std::string metric_cells(const EvalReport& r, const std::vector<double>& levels) {
  std::string s = fmt(r.q2);
  for (const double a : levels) s += "," + fmt(r.cp.at(a)) + "," + fmt(r.mpiw.at(a));
  return s;
}

std::string result_tag(const ExperimentResult& res) {
  const ExperimentConfig& c = res.config;
  std::string tag = benchmark_name(c.benchmark) + "_" + method_name(c.method);
  if (c.method == Method::GPBNN) {
    tag += "_" + c.transfer.name();
    if (c.transfer.kind == TransferKind::GaussHermite) tag += "_S" + std::to_string(c.transfer.order);
    tag += "_Nv" + std::to_string(c.chain.n_samples);
  }
  return tag;
}

}  // namespace

std::string metrics_csv(const std::vector<ExperimentResult>& results, bool with_timing) {
  if (results.empty()) throw InvalidArgument("no results to report");
  const std::vector<double>& levels = results.front().config.levels;
  std::ostringstream out;
  out << "benchmark,method,transfer,S,N_v,replication,q2";
  for (const double a : levels) out << ",cp_" << level_tag(a) << ",mpiw_" << level_tag(a);
  if (with_timing) out << ",wall_seconds";
  out << '\n';
  for (const ExperimentResult& res : results) {
    if (res.config.levels != levels) throw InvalidArgument("results disagree on interval levels");
    const std::string prefix = row_prefix(res.config);
    double total = 0.0;
    for (const ReplicationResult& rep : res.replications) {
      out << prefix << ',' << rep.replication << ',' << metric_cells(rep.report, levels);
      if (with_timing) out << ',' << fmt(rep.wall_seconds);
      out << '\n';
      total += rep.wall_seconds;
    }
    out << prefix << ",mean," << metric_cells(res.mean, levels);
    if (with_timing) out << ',' << fmt(total / static_cast<double>(res.replications.size()));
    out << '\n';
  }
  return out.str();
}

void emit_report(const std::vector<ExperimentResult>& results, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "predictions");
  {
    std::ofstream out(out_dir / "metrics.csv");
    if (!out) throw InvalidArgument("cannot write " + (out_dir / "metrics.csv").string());
    out << metrics_csv(results);
  }
  for (std::size_t k = 0; k < results.size(); ++k) {
    const ExperimentResult& res = results[k];
    std::string tag = result_tag(res);
    if (results.size() > 1) tag = std::to_string(k) + "_" + tag;
    for (const ReplicationResult& rep : res.replications) {
      const auto path = out_dir / "predictions" / (tag + "_rep" + std::to_string(rep.replication) + ".csv");
      std::ofstream out(path);
      if (!out) throw InvalidArgument("cannot write " + path.string());
      for (Index c = 0; c < rep.test_inputs.cols(); ++c) out << 'x' << c + 1 << ',';
      out << "truth,mean,lo,hi\n";
      for (Index i = 0; i < rep.test_inputs.rows(); ++i) {
        for (Index c = 0; c < rep.test_inputs.cols(); ++c) out << fmt(rep.test_inputs(i, c)) << ',';
        out << fmt(rep.truth(i)) << ',' << fmt(rep.mean(i)) << ',' << fmt(rep.lo(i)) << ',' << fmt(rep.hi(i)) << '\n';
      }
    }
  }
}

}  // namespace gpbnn
