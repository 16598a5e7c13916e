#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adkrr/data.hpp"
#include "adkrr/silo.hpp"

namespace adkrr {

enum class Method { AdaHoldout, AdaCv, Dkrr, DkrrLog, KrrWholeData };

std::string_view method_name(Method method);
Method method_from_name(std::string_view name);

struct SyntheticSpec {
  TargetKind target = TargetKind::G1;
  Eigen::Index train_n = 0;
  Eigen::Index test_n = 0;
  Eigen::Index dim = 0;
  double noise_std = 0.0;
};

struct CsvSpec {
  std::string path;
  std::string schema_path;
  double train_fraction = 0.5;  // fresh random division per trial
};

struct DataSpec {
  enum class Kind { Synthetic, Csv };
  Kind kind = Kind::Synthetic;
  SyntheticSpec synthetic;
  CsvSpec csv;
};

struct PartitionSpec {
  enum class Kind { Uniform, RandomMin };
  Kind kind = Kind::Uniform;
  Eigen::Index min_per_machine = 1;  // RandomMin only
};

struct SelectionSpec {
  double holdout_fraction = 0.5;
  int cv_folds = 5;
};

struct ExperimentConfig {
  std::string name;
  DataSpec data;
  std::vector<Method> methods;
  std::vector<Eigen::Index> machines;
  PartitionSpec partition;
  std::string grid_preset;
  CenterConfig centers;
  double mu = 1e-4;
  SelectionSpec selection;
  std::optional<double> bound;  // empty: use max |train output| per trial
  int trials = 10;
  std::uint64_t seed = 0;
  bool record_wall_time = true;
};

/// Parse a JSON config document. Paths inside it (CSV, schema) are resolved
/// relative to the document's own directory.
ExperimentConfig load_config(const std::string& path);

struct ExperimentRow {
  Method method = Method::Dkrr;
  Eigen::Index machines = 0;
  int trial = 0;
  double test_mse = 0.0;
  double selected_lambda_median = 0.0;  // over machines, post-transform
  std::uint64_t comm_scalars = 0;
  double wall_ms = 0.0;
  // Diagnostics kept out of the CSV outputs.
  std::vector<MachineSelection> selections;
  double prediction_min = 0.0;
  double prediction_max = 0.0;
  double bound = 0.0;
};

struct RowFailure {
  Method method = Method::Dkrr;
  Eigen::Index machines = 0;
  int trial = 0;
  std::string message;
};

struct ExperimentResult {
  std::vector<Method> methods;          // configured order, for output layout
  std::vector<Eigen::Index> machines;   // configured order
  std::vector<ExperimentRow> rows;
  std::vector<RowFailure> failures;
};

/// One row per (method, m, trial); a row that throws is recorded as a
/// failure and skipped, aborting nothing else. Deterministic given the
/// config: every random stream derives from the master seed.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                int threads = 0);

/// Write results.csv, summary.csv (population std over trials),
/// plot_mse_vs_m.csv (one mean-MSE column per method) and, when any row
/// failed, failures.csv.
void emit_outputs(const ExperimentResult& result, const std::string& dir);

}  // namespace adkrr
