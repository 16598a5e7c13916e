#include "adkrr/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <utility>

#include <nlohmann/json.hpp>

#include "adkrr/common.hpp"

namespace adkrr {

std::string_view method_name(Method method) {
  switch (method) {
    case Method::AdaHoldout: return "adadkrr-holdout";
    case Method::AdaCv: return "adadkrr-cv";
    case Method::Dkrr: return "dkrr";
    case Method::DkrrLog: return "dkrrlog";
    case Method::KrrWholeData: return "krr-whole-data";
  }
  throw ConfigError("unknown method id");
}

Method method_from_name(std::string_view name) {
  if (name == "adadkrr-holdout") return Method::AdaHoldout;
  if (name == "adadkrr-cv") return Method::AdaCv;
  if (name == "dkrr") return Method::Dkrr;
  if (name == "dkrrlog") return Method::DkrrLog;
  if (name == "krr-whole-data") return Method::KrrWholeData;
  throw ConfigError("unknown method \"" + std::string(name) + "\"");
}

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Stream indices for per-trial seed derivation.
enum : std::uint64_t {
  kDataStream = 0,
  kTestStream = 1,
  kPartitionStream = 2,
  kSplitStream = 3,
  kCenterStream = 4,
};

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir) {
  ExperimentConfig cfg;
  cfg.name = doc.value("name", std::string("experiment"));

  const json& data = doc.at("data");
  const std::string kind = data.at("kind").get<std::string>();
  if (kind == "synthetic") {
    cfg.data.kind = DataSpec::Kind::Synthetic;
    const std::string target = data.at("target").get<std::string>();
    if (target == "g1") {
      cfg.data.synthetic.target = TargetKind::G1;
    } else if (target == "g2") {
      cfg.data.synthetic.target = TargetKind::G2;
    } else {
      throw ConfigError("data.target must be g1 or g2");
    }
    cfg.data.synthetic.train_n = data.at("train_n").get<Eigen::Index>();
    cfg.data.synthetic.test_n = data.at("test_n").get<Eigen::Index>();
    cfg.data.synthetic.dim = data.at("dim").get<Eigen::Index>();
    cfg.data.synthetic.noise_std = data.at("noise_std").get<double>();
    if (cfg.data.synthetic.train_n < 1 || cfg.data.synthetic.test_n < 1 ||
        cfg.data.synthetic.dim < 1) {
      throw ConfigError("data: train_n, test_n and dim must be positive");
    }
    if (!(cfg.data.synthetic.noise_std >= 0.0)) {
      throw ConfigError("data.noise_std must be >= 0");
    }
  } else if (kind == "csv") {
    cfg.data.kind = DataSpec::Kind::Csv;
    cfg.data.csv.path = (base_dir / data.at("path").get<std::string>())
                            .lexically_normal()
                            .string();
    cfg.data.csv.schema_path =
        (base_dir / data.at("schema").get<std::string>())
            .lexically_normal()
            .string();
    cfg.data.csv.train_fraction = data.value("train_fraction", 0.5);
    if (!(cfg.data.csv.train_fraction > 0.0) ||
        !(cfg.data.csv.train_fraction < 1.0)) {
      throw ConfigError("data.train_fraction must lie in (0, 1)");
    }
  } else {
    throw ConfigError("data.kind must be synthetic or csv");
  }

  for (const auto& name : doc.at("methods")) {
    cfg.methods.push_back(method_from_name(name.get<std::string>()));
  }
  if (cfg.methods.empty()) throw ConfigError("methods must be nonempty");

  cfg.machines = doc.at("machines").get<std::vector<Eigen::Index>>();
  if (cfg.machines.empty()) throw ConfigError("machines must be nonempty");
  for (Eigen::Index m : cfg.machines) {
    if (m < 1) throw ConfigError("machine counts must be >= 1");
  }

  if (doc.contains("partition")) {
    const json& part = doc.at("partition");
    const std::string pkind = part.value("kind", std::string("uniform"));
    if (pkind == "uniform") {
      cfg.partition.kind = PartitionSpec::Kind::Uniform;
    } else if (pkind == "random-min") {
      cfg.partition.kind = PartitionSpec::Kind::RandomMin;
      cfg.partition.min_per_machine =
          part.at("min_per_machine").get<Eigen::Index>();
      if (cfg.partition.min_per_machine < 1) {
        throw ConfigError("partition.min_per_machine must be >= 1");
      }
    } else {
      throw ConfigError("partition.kind must be uniform or random-min");
    }
  }

  cfg.grid_preset = doc.at("grid").get<std::string>();
  preset_grid(cfg.grid_preset);  // validate the name now, not mid-run

  if (doc.contains("centers")) {
    const json& centers = doc.at("centers");
    const std::string ckind = centers.value("kind", std::string("sobol"));
    if (ckind == "sobol") {
      cfg.centers.kind = CenterKind::Sobol;
    } else if (ckind == "halton") {
      cfg.centers.kind = CenterKind::Halton;
    } else if (ckind == "random") {
      cfg.centers.kind = CenterKind::Random;
    } else {
      throw ConfigError("centers.kind must be sobol, halton or random");
    }
    if (centers.contains("count")) {
      const json& count = centers.at("count");
      if (count.is_string()) {
        if (count.get<std::string>() != "adaptive") {
          throw ConfigError("centers.count must be \"adaptive\" or a number");
        }
        cfg.centers.count = CenterCountPolicy::per_machine_average();
      } else {
        const auto fixed = count.get<Eigen::Index>();
        if (fixed < 1) throw ConfigError("centers.count must be >= 1");
        cfg.centers.count = CenterCountPolicy::fixed(fixed);
      }
    }
  }

  cfg.mu = doc.value("mu", 1e-4);
  if (!(cfg.mu > 0.0)) throw ConfigError("mu must be > 0");

  if (doc.contains("selection")) {
    const json& sel = doc.at("selection");
    cfg.selection.holdout_fraction = sel.value("holdout_fraction", 0.5);
    cfg.selection.cv_folds = sel.value("cv_folds", 5);
    if (!(cfg.selection.holdout_fraction > 0.0) ||
        !(cfg.selection.holdout_fraction < 1.0)) {
      throw ConfigError("selection.holdout_fraction must lie in (0, 1)");
    }
    if (cfg.selection.cv_folds < 2) {
      throw ConfigError("selection.cv_folds must be >= 2");
    }
  }

  if (doc.contains("bound")) {
    const json& bound = doc.at("bound");
    if (bound.is_string()) {
      if (bound.get<std::string>() != "auto") {
        throw ConfigError("bound must be \"auto\" or a positive number");
      }
    } else {
      const double value = bound.get<double>();
      if (!(value > 0.0)) throw ConfigError("bound must be > 0");
      cfg.bound = value;
    }
  }

  cfg.trials = doc.value("trials", 10);
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  cfg.seed = doc.value("seed", std::uint64_t{0});
  cfg.record_wall_time = doc.value("record_wall_time", true);
  return cfg;
}

struct TrialData {
  DataSet train;
  Eigen::MatrixXd test_inputs;
  Eigen::VectorXd test_truth;
  double bound = 0.0;
};

TrialData make_synthetic_trial(const ExperimentConfig& cfg,
                               std::uint64_t trial_seed) {
  const SyntheticSpec& spec = cfg.data.synthetic;
  TrialData out;
  SyntheticSample train =
      gen_synthetic(spec.target, spec.train_n, spec.dim, spec.noise_std,
                    rng::derive_seed(trial_seed, kDataStream));
  // Test targets are noise-free: generalization error is measured against
  // the function itself.
  const SyntheticSample test =
      gen_synthetic(spec.target, spec.test_n, spec.dim, 0.0,
                    rng::derive_seed(trial_seed, kTestStream));
  out.train = std::move(train.data);
  out.test_inputs = test.data.inputs;
  out.test_truth = test.clean;
  out.bound = cfg.bound ? *cfg.bound
                        : out.train.outputs.cwiseAbs().maxCoeff();
  return out;
}

TrialData make_csv_trial(const ExperimentConfig& cfg, const DataSet& full,
                         const PreprocessDoc& doc, std::uint64_t trial_seed) {
  const Eigen::Index n = full.size();
  if (n < 4) throw ConfigError("csv data: too few rows to divide");
  auto train_count = static_cast<Eigen::Index>(std::llround(
      cfg.data.csv.train_fraction * static_cast<double>(n)));
  train_count = std::max<Eigen::Index>(
      1, std::min<Eigen::Index>(train_count, n - 1));
  const auto perm = rng::shuffled_indices<Eigen::Index>(
      n, rng::derive_seed(trial_seed, kDataStream));

  auto take = [&full](const std::vector<Eigen::Index>& rows) {
    DataSet out;
    out.inputs.resize(static_cast<Eigen::Index>(rows.size()),
                      full.inputs.cols());
    out.outputs.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.inputs.row(static_cast<Eigen::Index>(i)) = full.inputs.row(rows[i]);
      out.outputs[static_cast<Eigen::Index>(i)] = full.outputs[rows[i]];
    }
    return out;
  };
  const std::vector<Eigen::Index> train_rows(perm.begin(),
                                             perm.begin() + train_count);
  const std::vector<Eigen::Index> test_rows(perm.begin() + train_count,
                                            perm.end());
  DataSet train = take(train_rows);
  DataSet test = take(test_rows);
  if (doc.minmax) {
    auto [train_norm, test_norm] =
        fit_apply_minmax(train.inputs, test.inputs);
    train.inputs = std::move(train_norm);
    test.inputs = std::move(test_norm);
  }

  TrialData out;
  out.bound =
      cfg.bound ? *cfg.bound : train.outputs.cwiseAbs().maxCoeff();
  out.train = std::move(train);
  out.test_inputs = std::move(test.inputs);
  out.test_truth = std::move(test.outputs);
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1
             ? values[mid]
             : 0.5 * (values[mid - 1] + values[mid]);
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string csv_quote(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);  // fixed \n, any platform
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return parse_config(doc, fs::path(path).parent_path());
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config, int threads) {
  ExperimentResult result;
  result.methods = config.methods;
  result.machines = config.machines;

  const ParamGrid grid = preset_grid(config.grid_preset);
  const SplitPlan base_holdout =
      SplitPlan::hold_out(config.selection.holdout_fraction, 0);
  const SplitPlan base_cv = SplitPlan::k_fold(config.selection.cv_folds, 0);

  // Real data is loaded once; every trial redivides it.
  std::optional<PreprocessDoc> doc;
  std::optional<DataSet> full;
  if (config.data.kind == DataSpec::Kind::Csv) {
    doc = load_preprocess_doc(config.data.csv.schema_path);
    full = load_dataset(config.data.csv.path, *doc);
  }

  std::vector<TrialData> trials;
  trials.reserve(static_cast<std::size_t>(config.trials));
  for (int t = 0; t < config.trials; ++t) {
    const std::uint64_t trial_seed =
        rng::derive_seed(config.seed, static_cast<std::uint64_t>(t));
    trials.push_back(config.data.kind == DataSpec::Kind::Synthetic
                         ? make_synthetic_trial(config, trial_seed)
                         : make_csv_trial(config, *full, *doc, trial_seed));
  }

  for (Method method : config.methods) {
    for (Eigen::Index m : config.machines) {
      for (int t = 0; t < config.trials; ++t) {
        const std::uint64_t trial_seed =
            rng::derive_seed(config.seed, static_cast<std::uint64_t>(t));
        const TrialData& data = trials[static_cast<std::size_t>(t)];
        try {
          const std::uint64_t pseed = rng::derive_seed(
              rng::derive_seed(trial_seed, kPartitionStream),
              static_cast<std::uint64_t>(m));
          const std::uint64_t sseed = rng::derive_seed(
              rng::derive_seed(trial_seed, kSplitStream),
              static_cast<std::uint64_t>(m));

          // The whole-data reference ignores m for the fit but keeps the
          // row's seed derivation, so it coincides bit for bit with the
          // m = 1 baseline cell.
          const Eigen::Index run_m =
              method == Method::KrrWholeData ? 1 : m;
          const Partition partition =
              config.partition.kind == PartitionSpec::Kind::Uniform ||
                      method == Method::KrrWholeData
                  ? partition_uniform(data.train.size(), run_m, pseed)
                  : partition_random_min(data.train.size(), run_m,
                                         config.partition.min_per_machine,
                                         pseed);

          CenterConfig centers = config.centers;
          if (centers.kind == CenterKind::Random && !centers.seed) {
            centers.seed = rng::derive_seed(trial_seed, kCenterStream);
          }

          const auto started = std::chrono::steady_clock::now();
          DistributedRunResult run;
          switch (method) {
            case Method::AdaHoldout: {
              SplitPlan plan = base_holdout;
              plan.seed = sseed;
              run = run_adadkrr(data.train, data.test_inputs, partition, grid,
                                plan, centers, config.mu, data.bound, threads);
              break;
            }
            case Method::AdaCv: {
              SplitPlan plan = base_cv;
              plan.seed = sseed;
              run = run_adadkrr(data.train, data.test_inputs, partition, grid,
                                plan, centers, config.mu, data.bound, threads);
              break;
            }
            case Method::Dkrr:
            case Method::KrrWholeData:
            case Method::DkrrLog: {
              SplitPlan plan = base_cv;
              plan.seed = sseed;
              const BaselineStrategy strategy =
                  method == Method::DkrrLog ? BaselineStrategy::DkrrLog
                                            : BaselineStrategy::Dkrr;
              run = run_baseline(strategy, data.train, data.test_inputs,
                                 partition, grid, plan, data.bound, threads);
              break;
            }
          }
          const auto elapsed = std::chrono::duration<double, std::milli>(
              std::chrono::steady_clock::now() - started);

          ExperimentRow row;
          row.method = method;
          row.machines = m;
          row.trial = t;
          row.test_mse = test_mse(run.prediction.values, data.test_truth);
          std::vector<double> lambdas;
          lambdas.reserve(run.selections.size());
          for (const MachineSelection& sel : run.selections) {
            lambdas.push_back(sel.applied_lambda);
          }
          row.selected_lambda_median = median(std::move(lambdas));
          row.comm_scalars = run.ledger.total_scalars;
          row.wall_ms = config.record_wall_time ? elapsed.count() : 0.0;
          row.selections = std::move(run.selections);
          row.prediction_min = run.prediction.values.minCoeff();
          row.prediction_max = run.prediction.values.maxCoeff();
          row.bound = data.bound;
          result.rows.push_back(row);
        } catch (const std::exception& e) {
          result.failures.push_back({method, m, t, e.what()});
        }
      }
    }
  }
  return result;
}

void emit_outputs(const ExperimentResult& result, const std::string& dir) {
  const fs::path base(dir);
  std::error_code ec;
  fs::create_directories(base, ec);
  if (ec) throw IoError("cannot create " + base.string());

  {
    auto out = open_out(base / "results.csv");
    out << "method,m,trial,test_mse,comm_scalars,wall_ms\n";
    for (const ExperimentRow& row : result.rows) {
      out << method_name(row.method) << ',' << row.machines << ','
          << row.trial << ',' << format_double(row.test_mse) << ','
          << row.comm_scalars << ',' << format_double(row.wall_ms) << '\n';
    }
  }

  // Aggregate over trials per (method, m), keeping configured order.
  struct Cell {
    std::vector<double> mses;
  };
  auto cell_rows = [&result](Method method, Eigen::Index m) {
    Cell cell;
    for (const ExperimentRow& row : result.rows) {
      if (row.method == method && row.machines == m) {
        cell.mses.push_back(row.test_mse);
      }
    }
    return cell;
  };
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };

  {
    auto out = open_out(base / "summary.csv");
    out << "method,m,trials,mean_mse,std_mse_population\n";
    for (Method method : result.methods) {
      for (Eigen::Index m : result.machines) {
        const Cell cell = cell_rows(method, m);
        if (cell.mses.empty()) continue;
        const double mean = mean_of(cell.mses);
        double var = 0.0;
        for (double x : cell.mses) var += (x - mean) * (x - mean);
        var /= static_cast<double>(cell.mses.size());
        out << method_name(method) << ',' << m << ',' << cell.mses.size()
            << ',' << format_double(mean) << ','
            << format_double(std::sqrt(var)) << '\n';
      }
    }
  }

  {
    auto out = open_out(base / "plot_mse_vs_m.csv");
    out << 'm';
    for (Method method : result.methods) out << ',' << method_name(method);
    out << '\n';
    for (Eigen::Index m : result.machines) {
      out << m;
      for (Method method : result.methods) {
        const Cell cell = cell_rows(method, m);
        out << ','
            << (cell.mses.empty() ? "nan" : format_double(mean_of(cell.mses)));
      }
      out << '\n';
    }
  }

  if (!result.failures.empty()) {
    auto out = open_out(base / "failures.csv");
    out << "method,m,trial,error\n";
    for (const RowFailure& failure : result.failures) {
      out << method_name(failure.method) << ',' << failure.machines << ','
          << failure.trial << ',' << csv_quote(failure.message) << '\n';
    }
  }
}

}  // namespace adkrr
