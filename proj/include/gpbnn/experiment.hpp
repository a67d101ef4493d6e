#pragma once

#include "gpbnn/bench.hpp"
#include "gpbnn/design.hpp"
#include "gpbnn/gpbnn.hpp"
#include "gpbnn/metrics.hpp"
#include "gpbnn/serialize.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gpbnn {

enum class Benchmark { OneD, Currin, Pendulum };
enum class Method { GP1F, GPBNN };

std::string benchmark_name(Benchmark b);
std::string method_name(Method m);

struct SweepSpec {
  std::string parameter;  // "S" or "N_v"
  std::vector<double> values;
};

/// One experimental protocol. Defaults per benchmark come from defaults().
struct ExperimentConfig {
  Benchmark benchmark = Benchmark::OneD;
  std::vector<Interval> excluded;  // OneD: segments without low-fidelity data
  Method method = Method::GPBNN;
  TransferMethod transfer = TransferMethod::gauss_hermite(5);
  Index n_low = 100;
  Index n_high = 20;
  Index n_test = 1000;
  std::vector<double> levels{0.8};
  std::optional<SweepSpec> sweep;
  int replications = 5;
  std::uint64_t seed = 0;
  BNNConfig bnn;
  ChainConfig chain;
  NuggetMode low_nugget = NuggetMode::Fixed;
  InputScaling input_scaling = InputScaling::Units;
  int lhs_restarts = 100;
  double currin_delta = 0.1;
  double currin_noise_variance = 0.08;
  double pendulum_dt = 0.005;

  static ExperimentConfig defaults(Benchmark b);
  void validate() const;
};

/// Reads the JSON config; missing keys take the benchmark defaults.
ExperimentConfig config_from_json(const Json& j);
Json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ReplicationResult {
  int replication = 0;
  EvalReport report;
  double wall_seconds = 0.0;
  double low_q2 = 0.0;  // low-fidelity GP on held-out low-fidelity outputs (GPBNN only)
  Matrix test_inputs;
  Vector truth;
  Vector mean;
  Vector lo;  // interval at the first level
  Vector hi;
  double accept_rate = 0.0;
  Index divergences = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ReplicationResult> replications;
  EvalReport mean;
  double mean_low_q2 = 0.0;
};

/// Labeled sub-seed for one replication, e.g. replication_seed(cfg, "design/low", r).
std::uint64_t replication_seed(const ExperimentConfig& cfg, const char* label, int replication);

/// Learning and test data of one replication. The low-fidelity outputs are
/// only computed when requested, so the GP1F path never touches them.
struct ReplicationData {
  Dataset low;
  Dataset high;
  Dataset test;
};
ReplicationData generate_data(const ExperimentConfig& cfg, int replication, bool with_low = true);

/// Trains the configured GPBNN model on one replication's data.
GPBNNModel fit_model(const ExperimentConfig& cfg, const Dataset& low, const Dataset& high, int replication);

/// Generates data, fits and evaluates one replication.
ReplicationResult run_replication(const ExperimentConfig& cfg, int replication);

/// All replications, optionally spread over threads; results are in replication order.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 1);

/// One configuration per sweep value, with S (GH order) or N_v substituted.
std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& cfg);
std::vector<ExperimentResult> run_sweep(const ExperimentConfig& cfg, int threads = 1);

/// Metric rows: benchmark, method, transfer, S, N_v, replication, q2, cp_XX,
/// mpiw_XX per level, wall_seconds; each result ends with its mean row.
std::string metrics_csv(const std::vector<ExperimentResult>& results, bool with_timing = true);

/// Writes metrics.csv and one prediction dump per replication under out_dir.
void emit_report(const std::vector<ExperimentResult>& results, const std::filesystem::path& out_dir);

/// Evaluates a trained model on a test dataset.
struct ModelEvaluation {
  EvalReport report;
  std::vector<PredictionSummary> predictions;  // interval at the first level
};
ModelEvaluation evaluate_model(const GPBNNModel& model, const Dataset& test, const std::vector<double>& levels,
                               std::uint64_t interval_seed);

}  // namespace gpbnn
