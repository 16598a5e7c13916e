#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adkrr/experiment.hpp"

using namespace adkrr;
namespace fs = std::filesystem;

namespace {

struct ScratchDir {
  fs::path path;
  ScratchDir() {
    path = fs::temp_directory_path() /
           ("adkrr-exp-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::string file(const std::string& name, const std::string& text) const {
    const fs::path p = path / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p.string();
  }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.name = "tiny";
  cfg.data.kind = DataSpec::Kind::Synthetic;
  cfg.data.synthetic = {TargetKind::G1, 80, 30, 2, 0.2};
  cfg.methods = {Method::AdaHoldout, Method::Dkrr};
  cfg.machines = {1, 2};
  cfg.grid_preset = "wendland-d3";
  cfg.mu = 1e-4;
  cfg.bound = 3.0;
  cfg.trials = 3;
  cfg.seed = 12345;
  cfg.record_wall_time = false;
  return cfg;
}

const std::string kValidConfig = R"({
  "name": "demo",
  "data": {"kind": "synthetic", "target": "g1", "train_n": 40, "test_n": 10,
           "dim": 2, "noise_std": 0.1},
  "methods": ["adadkrr-holdout", "dkrr"],
  "machines": [1, 2],
  "grid": "wendland-d3",
  "centers": {"kind": "sobol", "count": 16},
  "mu": 0.0001,
  "selection": {"holdout_fraction": 0.5, "cv_folds": 4},
  "bound": 3.0,
  "trials": 2,
  "seed": 7,
  "record_wall_time": false
})";

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("method names round trip") {
  for (const Method m : {Method::AdaHoldout, Method::AdaCv, Method::Dkrr,
                         Method::DkrrLog, Method::KrrWholeData}) {
    CHECK(method_from_name(method_name(m)) == m);
  }
  CHECK(method_name(Method::AdaHoldout) == "adadkrr-holdout");
  CHECK(method_name(Method::KrrWholeData) == "krr-whole-data");
  CHECK_THROWS_AS(method_from_name("mystery"), ConfigError);
}

TEST_CASE("config loading") {
  ScratchDir dir;
  const ExperimentConfig cfg =
      load_config(dir.file("demo.json", kValidConfig));
  CHECK(cfg.name == "demo");
  CHECK(cfg.data.synthetic.train_n == 40);
  CHECK(cfg.data.synthetic.noise_std == 0.1);
  REQUIRE(cfg.methods.size() == 2);
  CHECK(cfg.methods[0] == Method::AdaHoldout);
  CHECK(cfg.machines == std::vector<Eigen::Index>{1, 2});
  CHECK(cfg.grid_preset == "wendland-d3");
  CHECK(cfg.centers.kind == CenterKind::Sobol);
  CHECK_FALSE(cfg.centers.count.adaptive);
  CHECK(cfg.centers.count.fixed_n == 16);
  CHECK(cfg.selection.cv_folds == 4);
  REQUIRE(cfg.bound.has_value());
  CHECK(*cfg.bound == 3.0);
  CHECK(cfg.trials == 2);
  CHECK(cfg.seed == 7);
  CHECK_FALSE(cfg.record_wall_time);
}

TEST_CASE("config validation") {
  ScratchDir dir;
  CHECK_THROWS_AS(load_config((dir.path / "absent.json").string()), IoError);
  CHECK_THROWS_AS(load_config(dir.file("junk.json", "{oops")), ConfigError);

  auto mutated = [&dir](const std::string& name, const std::string& from,
                        const std::string& to) {
    std::string text = kValidConfig;
    const auto at = text.find(from);
    REQUIRE(at != std::string::npos);
    text.replace(at, from.size(), to);
    return dir.file(name, text);
  };

  CHECK_THROWS_AS(load_config(mutated("m1.json", "\"dkrr\"", "\"mystery\"")),
                  ConfigError);
  CHECK_THROWS_AS(load_config(mutated("m2.json", "\"machines\": [1, 2]",
                                      "\"machines\": []")),
                  ConfigError);
  CHECK_THROWS_AS(load_config(mutated("m3.json", "\"wendland-d3\"",
                                      "\"no-such-grid\"")),
                  ConfigError);
  CHECK_THROWS_AS(load_config(mutated("m4.json", "\"trials\": 2",
                                      "\"trials\": 0")),
                  ConfigError);
  CHECK_THROWS_AS(load_config(mutated("m5.json", "\"noise_std\": 0.1",
                                      "\"noise_std\": -1")),
                  ConfigError);
  CHECK_THROWS_AS(load_config(mutated("m6.json", "\"mu\": 0.0001",
                                      "\"mu\": 0")),
                  ConfigError);
}

TEST_CASE("csv paths resolve relative to the config") {
  ScratchDir dir;
  fs::create_directories(dir.path / "sub");
  std::ofstream(dir.path / "sub" / "data.csv") << "1,2\n3,4\n";
  std::ofstream(dir.path / "sub" / "schema.json")
      << R"({"inputs": [0], "targets": [1]})";
  const std::string config_path = dir.file("sub/exp.json", R"({
    "data": {"kind": "csv", "path": "data.csv", "schema": "schema.json"},
    "methods": ["dkrr"], "machines": [1], "grid": "wendland-d3"
  })");
  const ExperimentConfig cfg = load_config(config_path);
  CHECK(fs::path(cfg.data.csv.path).parent_path() == dir.path / "sub");
  CHECK(fs::path(cfg.data.csv.schema_path).filename() == "schema.json");
}

TEST_CASE("whole-data reference coincides with the one-machine baseline") {
  ExperimentConfig cfg = tiny_config();
  cfg.methods = {Method::Dkrr, Method::KrrWholeData};
  cfg.machines = {1};
  cfg.trials = 2;
  const ExperimentResult result = run_experiment(cfg);
  REQUIRE(result.rows.size() == 4);
  REQUIRE(result.failures.empty());
  for (int t = 0; t < 2; ++t) {
    const ExperimentRow& dkrr = result.rows[static_cast<std::size_t>(t)];
    const ExperimentRow& whole = result.rows[static_cast<std::size_t>(2 + t)];
    CHECK(dkrr.method == Method::Dkrr);
    CHECK(whole.method == Method::KrrWholeData);
    CHECK(std::abs(dkrr.test_mse - whole.test_mse) <= 1e-10);
  }
}

TEST_CASE("row counting and output layout") {
  ScratchDir dir;
  const ExperimentConfig cfg = tiny_config();
  const ExperimentResult result = run_experiment(cfg);
  REQUIRE(result.failures.empty());
  CHECK(result.rows.size() == 2 * 2 * 3);

  emit_outputs(result, dir.path.string());
  const auto results_lines = lines_of(slurp(dir.path / "results.csv"));
  REQUIRE(results_lines.size() == 13);
  CHECK(results_lines[0] == "method,m,trial,test_mse,comm_scalars,wall_ms");

  const auto summary_lines = lines_of(slurp(dir.path / "summary.csv"));
  REQUIRE(summary_lines.size() == 5);
  CHECK(summary_lines[0] ==
        "method,m,trials,mean_mse,std_mse_population");

  const auto plot_lines = lines_of(slurp(dir.path / "plot_mse_vs_m.csv"));
  REQUIRE(plot_lines.size() == 3);
  CHECK(plot_lines[0] == "m,adadkrr-holdout,dkrr");
  CHECK(plot_lines[1].rfind("1,", 0) == 0);
  CHECK(plot_lines[2].rfind("2,", 0) == 0);

  CHECK_FALSE(fs::exists(dir.path / "failures.csv"));
}

TEST_CASE("summary statistics") {
  ScratchDir dir;
  ExperimentResult result;
  result.methods = {Method::Dkrr};
  result.machines = {4};
  for (int t = 0; t < 3; ++t) {
    ExperimentRow row;
    row.method = Method::Dkrr;
    row.machines = 4;
    row.trial = t;
    row.test_mse = static_cast<double>(t + 1);
    result.rows.push_back(row);
  }
  emit_outputs(result, dir.path.string());
  const auto summary = lines_of(slurp(dir.path / "summary.csv"));
  REQUIRE(summary.size() == 2);

  std::istringstream fields(summary[1]);
  std::string method, m, trials, mean, stddev;
  std::getline(fields, method, ',');
  std::getline(fields, m, ',');
  std::getline(fields, trials, ',');
  std::getline(fields, mean, ',');
  std::getline(fields, stddev, ',');
  CHECK(method == "dkrr");
  CHECK(m == "4");
  CHECK(trials == "3");
  CHECK(std::abs(std::stod(mean) - 2.0) <= 1e-12);
  CHECK(std::abs(std::stod(stddev) - std::sqrt(2.0 / 3.0)) <= 1e-12);
}

TEST_CASE("reruns are byte identical") {
  ScratchDir dir;
  ExperimentConfig cfg = tiny_config();
  cfg.machines = {2};
  cfg.trials = 2;

  fs::create_directories(dir.path / "a");
  fs::create_directories(dir.path / "b");
  emit_outputs(run_experiment(cfg), (dir.path / "a").string());
  emit_outputs(run_experiment(cfg), (dir.path / "b").string());
  CHECK(slurp(dir.path / "a" / "results.csv") ==
        slurp(dir.path / "b" / "results.csv"));
  CHECK(slurp(dir.path / "a" / "summary.csv") ==
        slurp(dir.path / "b" / "summary.csv"));
}

TEST_CASE("row failures are recorded and isolated") {
  ScratchDir dir;
  ExperimentConfig cfg = tiny_config();
  cfg.methods = {Method::Dkrr};
  cfg.machines = {50};  // shards of one or two samples cannot be cross-validated
  cfg.trials = 2;
  const ExperimentResult result = run_experiment(cfg);
  CHECK(result.rows.empty());
  REQUIRE(result.failures.size() == 2);
  CHECK(result.failures[0].machines == 50);
  CHECK(!result.failures[0].message.empty());

  emit_outputs(result, dir.path.string());
  CHECK(fs::exists(dir.path / "failures.csv"));
  const auto failure_lines = lines_of(slurp(dir.path / "failures.csv"));
  CHECK(failure_lines.size() == 3);
}

TEST_CASE("experiment rows carry diagnostics") {
  ExperimentConfig cfg = tiny_config();
  cfg.methods = {Method::AdaHoldout, Method::DkrrLog};
  cfg.machines = {2};
  cfg.trials = 1;
  const ExperimentResult result = run_experiment(cfg);
  REQUIRE(result.rows.size() == 2);
  for (const ExperimentRow& row : result.rows) {
    CHECK(row.selections.size() == 2);
    CHECK(row.bound == 3.0);
    CHECK(row.prediction_min <= row.prediction_max);
    for (const MachineSelection& sel : row.selections) {
      CHECK(sel.lambda > 0.0);
      CHECK(sel.applied_lambda > 0.0);
    }
  }
  // the adaptive rows are truncated
  CHECK(result.rows[0].prediction_max <= 3.0);
  CHECK(result.rows[0].prediction_min >= -3.0);
  // the transformed lambda never exceeds the selected one
  for (const MachineSelection& sel : result.rows[1].selections) {
    CHECK(sel.applied_lambda <= sel.lambda);
  }
}

}  // TEST_SUITE
