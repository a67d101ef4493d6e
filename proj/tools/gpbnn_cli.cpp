// gpbnn: command-line front end for the multi-fidelity surrogate.
//
//   gpbnn generate   --config c.json --out data/          low.csv high.csv test.csv
//   gpbnn fit        --config c.json --out fit/ [--low l.csv --high h.csv]
//   gpbnn evaluate   --model fit/model.json --test t.csv --out eval/
//   gpbnn experiment --config c.json --out results/ --threads 4
//   gpbnn sweep      --config c.json --out results/

#include "gpbnn/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace gpbnn;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  int threads = 1;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
  auto* opt = cmd->add_option("--config", c.config, "Experiment configuration (JSON)")->check(CLI::ExistingFile);
  if (needs_config) opt->required();
  cmd->add_option("--seed", c.seed, "Master seed; overrides the config");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig::defaults(Benchmark::OneD) : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void print_summary(const std::vector<ExperimentResult>& results) {
  for (const ExperimentResult& res : results) {
    std::cout << benchmark_name(res.config.benchmark) << ' ' << method_name(res.config.method);
    if (res.config.method == Method::GPBNN)
      std::cout << ' ' << res.config.transfer.name() << " S=" << res.config.transfer.order
                << " N_v=" << res.config.chain.n_samples;
    std::cout << "  Q2=" << res.mean.q2;
    for (const double a : res.config.levels) std::cout << "  CP=" << res.mean.cp.at(a) << "  MPIW=" << res.mean.mpiw.at(a);
    std::cout << '\n';
  }
}

int cmd_generate(const Common& c) {
  const ExperimentConfig cfg = resolve(c);
  const std::filesystem::path out(c.out);
  std::filesystem::create_directories(out);
  const ReplicationData data = generate_data(cfg, 0);
  write_dataset(data.low, out / "low.csv");
  write_dataset(data.high, out / "high.csv");
  write_dataset(data.test, out / "test.csv");
  std::cout << "wrote " << data.low.size() << " low, " << data.high.size() << " high, " << data.test.size()
            << " test points to " << out.string() << '\n';
  return 0;
}

int cmd_fit(const Common& c, const std::string& low_path, const std::string& high_path) {
  const ExperimentConfig cfg = resolve(c);
  if (low_path.empty() != high_path.empty()) throw InvalidArgument("--low and --high go together");
  Dataset low;
  Dataset high;
  if (low_path.empty()) {
    ReplicationData data = generate_data(cfg, 0);
    low = std::move(data.low);
    high = std::move(data.high);
  } else {
    low = read_dataset(low_path);
    high = read_dataset(high_path);
  }
  const GPBNNModel model = fit_model(cfg, low, high, 0);
  const std::filesystem::path out(c.out);
  std::filesystem::create_directories(out);
  write_json(to_json(model), out / "model.json");
  std::cout << "draws=" << model.n_draws() << " accept=" << model.posterior_draws.accept_rate
            << " divergences=" << model.posterior_draws.divergences << " step=" << model.posterior_draws.step_size
            << '\n';
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& model_path, const std::string& test_path,
                 std::vector<double> levels) {
  const GPBNNModel model = model_from_json(read_json(model_path));
  const Dataset test = read_dataset(test_path);
  const std::uint64_t seed = derive_seed(c.seed.value_or(0), "interval-noise");
  const ModelEvaluation ev = evaluate_model(model, test, levels, seed);
  const std::filesystem::path out(c.out);
  std::filesystem::create_directories(out);
  write_json(to_json(ev.report), out / "metrics.json");
  std::ofstream pred(out / "predictions.csv");
  for (Index k = 0; k < test.dim(); ++k) pred << 'x' << k + 1 << ',';
  pred << "truth,mean,variance,lo,hi\n";
  pred.precision(17);
  for (Index i = 0; i < test.size(); ++i) {
    for (Index k = 0; k < test.dim(); ++k) pred << test.inputs(i, k) << ',';
    const PredictionSummary& p = ev.predictions[static_cast<std::size_t>(i)];
    pred << test.outputs(i) << ',' << p.mean << ',' << p.variance << ',' << p.lo << ',' << p.hi << '\n';
  }
  std::cout << to_json(ev.report).dump() << '\n';
  return 0;
}

int cmd_experiment(const Common& c, bool sweep) {
  const ExperimentConfig cfg = resolve(c);
  if (sweep && !cfg.sweep) throw InvalidArgument("sweep needs a 'sweep' entry in the config");
  const std::vector<ExperimentResult> results = sweep ? run_sweep(cfg, c.threads)
                                                      : std::vector<ExperimentResult>{run_experiment(cfg, c.threads)};
  emit_report(results, c.out);
  write_json(to_json(cfg), std::filesystem::path(c.out) / "config.json");
  print_summary(results);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GP -> BNN multi-fidelity surrogate"};
  app.require_subcommand(1);

  Common gen_opts, fit_opts, eval_opts, exp_opts, sweep_opts;
  std::string low_path, high_path, model_path, test_path;
  std::vector<double> levels{0.8};

  auto* gen = app.add_subcommand("generate", "Write low, high and test datasets for replication 0");
  add_common(gen, gen_opts, false);

  auto* fit = app.add_subcommand("fit", "Train a model and write model.json");
  add_common(fit, fit_opts, false);
  fit->add_option("--low", low_path, "Low-fidelity dataset (CSV)")->check(CLI::ExistingFile);
  fit->add_option("--high", high_path, "High-fidelity dataset (CSV)")->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("evaluate", "Metrics of a saved model on a test set");
  add_common(eval, eval_opts, false);
  eval->add_option("--model", model_path, "model.json from fit")->required()->check(CLI::ExistingFile);
  eval->add_option("--test", test_path, "Test dataset (CSV)")->required()->check(CLI::ExistingFile);
  eval->add_option("--levels", levels, "Interval levels")->check(CLI::Range(0.0, 1.0));

  auto* exp = app.add_subcommand("experiment", "Full replicated protocol");
  add_common(exp, exp_opts, true);

  auto* sw = app.add_subcommand("sweep", "S or N_v study");
  add_common(sw, sweep_opts, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(gen_opts);
    if (*fit) return cmd_fit(fit_opts, low_path, high_path);
    if (*eval) return cmd_evaluate(eval_opts, model_path, test_path, levels);
    if (*exp) return cmd_experiment(exp_opts, false);
    if (*sw) return cmd_experiment(sweep_opts, true);
  } catch (const gpbnn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
