#include "gpbnn/experiment.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gpbnn;

namespace {

ExperimentConfig tiny(Benchmark b = Benchmark::OneD) {
  ExperimentConfig cfg = ExperimentConfig::defaults(b);
  cfg.n_low = 20;
  cfg.n_high = 8;
  cfg.n_test = 30;
  cfg.replications = 2;
  cfg.seed = 17;
  cfg.bnn.hidden = 8;
  cfg.chain.n_samples = 60;
  cfg.chain.warmup = 60;
  return cfg;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("benchmark defaults") {
  const ExperimentConfig one = ExperimentConfig::defaults(Benchmark::OneD);
  CHECK(one.n_low == 100);
  CHECK(one.n_high == 20);
  CHECK(one.n_test == 1000);
  CHECK(one.bnn.hidden == 30);
  CHECK(one.transfer.order == 5);
  CHECK(one.chain.n_samples == 500);
  CHECK(one.levels == std::vector<double>{0.8});
  const ExperimentConfig cur = ExperimentConfig::defaults(Benchmark::Currin);
  CHECK(cur.n_low == 25);
  CHECK(cur.n_high == 15);
  CHECK(cur.bnn.hidden == 40);
  CHECK(cur.low_nugget == NuggetMode::Estimated);
  CHECK(ExperimentConfig::defaults(Benchmark::Pendulum).replications == 5);
}

TEST_CASE("config JSON fills missing keys from the benchmark defaults and round trips") {
  const Json j = Json::parse(R"({"benchmark": "currin", "n_high": 12, "transfer": {"kind": "quantiles", "level": 0.7},
                                 "sweep": {"parameter": "N_v", "values": [100, 200]}, "chain": {"warmup": 50}})");
  const ExperimentConfig cfg = config_from_json(j);
  CHECK(cfg.benchmark == Benchmark::Currin);
  CHECK(cfg.n_low == 25);
  CHECK(cfg.n_high == 12);
  CHECK(cfg.bnn.hidden == 40);
  CHECK(cfg.transfer.kind == TransferKind::Quantiles);
  CHECK(cfg.transfer.quantile_level == 0.7);
  CHECK(cfg.chain.warmup == 50);
  CHECK(cfg.chain.n_samples == 500);
  REQUIRE(cfg.sweep);
  CHECK(cfg.sweep->parameter == "N_v");
  const ExperimentConfig back = config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"n_test": 1})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"replications": 0})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"benchmark": "nope"})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"sweep": {"parameter": "S", "values": [0]}})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"levels": [1.2]})")), InvalidArgument);
}

TEST_CASE("malformed config file reports its line") {
  const auto path = std::filesystem::temp_directory_path() / "gpbnn_bad_config.json";
  std::ofstream(path) << "{\n  \"seed\": 1,\n  \"n_low\": ,\n}\n";
  try {
    load_config(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("sweeps expand into one configuration per value") {
  ExperimentConfig cfg = tiny();
  cfg.sweep = SweepSpec{"S", {1, 3, 5}};
  const auto s = expand_sweep(cfg);
  REQUIRE(s.size() == 3);
  CHECK(s[1].transfer.kind == TransferKind::GaussHermite);
  CHECK(s[1].transfer.order == 3);
  CHECK_FALSE(s[1].sweep);
  cfg.sweep = SweepSpec{"N_v", {50, 80}};
  CHECK(expand_sweep(cfg)[1].chain.n_samples == 80);
  cfg.sweep.reset();
  CHECK(expand_sweep(cfg).size() == 1);
}

TEST_CASE("replication sub-seeds differ by label and replication") {
  const ExperimentConfig cfg = tiny();
  CHECK(replication_seed(cfg, "design/low", 0) != replication_seed(cfg, "design/high", 0));
  CHECK(replication_seed(cfg, "design/low", 0) != replication_seed(cfg, "design/low", 1));
  const ReplicationData a = generate_data(cfg, 1);
  const ReplicationData b = generate_data(cfg, 1);
  CHECK(a.low.inputs == b.low.inputs);
  CHECK(a.test.outputs == b.test.outputs);
  CHECK(a.high.inputs != generate_data(cfg, 0).high.inputs);
  CHECK(generate_data(cfg, 0, false).low.size() == 0);
}

TEST_CASE("metrics CSV has one row per replication plus a mean row") {
  ExperimentConfig cfg = tiny();
  cfg.replications = 1;
  const ExperimentResult res = run_experiment(cfg);
  const auto rows = lines(metrics_csv({res}));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "benchmark,method,transfer,S,N_v,replication,q2,cp_80,mpiw_80,wall_seconds");
  CHECK(rows[1].rfind("oned,gpbnn,gauss_hermite,5,60,0,", 0) == 0);
  CHECK(rows[2].rfind("oned,gpbnn,gauss_hermite,5,60,mean,", 0) == 0);
  CHECK(lines(metrics_csv({res}, false))[0] == "benchmark,method,transfer,S,N_v,replication,q2,cp_80,mpiw_80");
}

TEST_CASE("reports are written with one prediction row per test point") {
  const ExperimentConfig cfg = tiny();
  const ExperimentResult res = run_experiment(cfg, 2);
  REQUIRE(res.replications.size() == 2);
  CHECK(res.replications[0].replication == 0);
  CHECK(res.replications[1].replication == 1);
  const auto dir = std::filesystem::temp_directory_path() / "gpbnn_report_test";
  std::filesystem::remove_all(dir);
  emit_report({res}, dir);
  CHECK(std::filesystem::exists(dir / "metrics.csv"));
  const auto dump = lines(slurp(dir / "predictions" / "oned_gpbnn_gauss_hermite_S5_Nv60_rep1.csv"));
  CHECK(dump.size() == 31);
  CHECK(dump[0] == "x1,truth,mean,lo,hi");
}

TEST_CASE("experiments are deterministic across runs and thread counts") {
  ExperimentConfig cfg = tiny();
  cfg.levels = {0.8, 0.95};
  const std::string a = metrics_csv({run_experiment(cfg, 1)}, false);
  const std::string b = metrics_csv({run_experiment(cfg, 2)}, false);
  CHECK(a == b);
  cfg.seed = 18;
  CHECK(metrics_csv({run_experiment(cfg, 1)}, false) != a);
}

TEST_CASE("single-fidelity baseline does not depend on the low-fidelity design") {
  ExperimentConfig cfg = tiny();
  cfg.method = Method::GP1F;
  const std::string a = metrics_csv({run_experiment(cfg)}, false);
  cfg.n_low = 3;
  cfg.excluded = {{0.0, 0.9}};
  const std::string b = metrics_csv({run_experiment(cfg)}, false);
  CHECK(a == b);
  CHECK(lines(a)[1].rfind("oned,gp1f,none,,,0,", 0) == 0);
}

TEST_CASE("failures carry the replication index") {
  ExperimentConfig cfg = tiny();
  cfg.excluded = {{0.0, 1.0}};
  try {
    run_experiment(cfg);
    FAIL("expected a failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("replication 0") != std::string::npos);
  }
}

TEST_CASE("CURRIN and pendulum replications run") {
  ExperimentConfig cur = tiny(Benchmark::Currin);
  cur.replications = 1;
  const ExperimentResult rc = run_experiment(cur);
  CHECK(rc.replications[0].test_inputs.cols() == 2);
  ExperimentConfig pen = tiny(Benchmark::Pendulum);
  pen.replications = 1;
  pen.n_test = 5;
  const ExperimentResult rp = run_experiment(pen);
  CHECK(rp.replications[0].test_inputs.cols() == 5);
  CHECK(std::isfinite(rp.mean.q2));
}
