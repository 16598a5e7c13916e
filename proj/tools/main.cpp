#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <adkrr/common.hpp>
#include <adkrr/data.hpp>
#include <adkrr/experiment.hpp>

#ifndef ADKRR_SOURCE_PRESETS
#define ADKRR_SOURCE_PRESETS ""
#endif
#ifndef ADKRR_INSTALL_PRESETS
#define ADKRR_INSTALL_PRESETS ""
#endif

namespace {

namespace fs = std::filesystem;

fs::path resolve_presets_dir(const std::string& flag) {
  std::vector<fs::path> candidates;
  if (!flag.empty()) candidates.emplace_back(flag);
  if (const char* env = std::getenv("ADKRR_PRESETS")) {
    candidates.emplace_back(env);
  }
  candidates.emplace_back(ADKRR_SOURCE_PRESETS);
  candidates.emplace_back(ADKRR_INSTALL_PRESETS);
  for (const fs::path& dir : candidates) {
    if (!dir.empty() && fs::is_directory(dir)) return dir;
  }
  throw adkrr::ConfigError(
      "no presets directory found; pass --dir or set ADKRR_PRESETS");
}

fs::path resolve_preset_file(const std::string& name) {
  if (fs::is_regular_file(name)) return name;
  const fs::path in_dir = resolve_presets_dir("") / (name + ".json");
  if (fs::is_regular_file(in_dir)) return in_dir;
  throw adkrr::ConfigError("preset \"" + name + "\" not found (looked for " +
                           in_dir.string() + ")");
}

int list_presets(const std::string& dir_flag) {
  const fs::path dir = resolve_presets_dir(dir_flag);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& file : files) {
    std::printf("%-16s %s\n", file.stem().string().c_str(),
                file.string().c_str());
  }
  return 0;
}

int run_config(const std::string& config_path, const std::string& out_dir,
               bool seed_given, std::uint64_t seed, int threads) {
  adkrr::ExperimentConfig config = adkrr::load_config(config_path);
  if (seed_given) config.seed = seed;
  const std::string dir =
      out_dir.empty() ? (fs::path("out") / config.name).string() : out_dir;

  const adkrr::ExperimentResult result =
      adkrr::run_experiment(config, threads);
  adkrr::emit_outputs(result, dir);

  for (const adkrr::RowFailure& failure : result.failures) {
    std::fprintf(stderr, "row failed: method=%s m=%lld trial=%d: %s\n",
                 std::string(adkrr::method_name(failure.method)).c_str(),
                 static_cast<long long>(failure.machines), failure.trial,
                 failure.message.c_str());
  }
  std::printf("wrote %s (%zu rows, %zu failures)\n",
              (fs::path(dir) / "results.csv").string().c_str(),
              result.rows.size(), result.failures.size());
  return result.failures.empty() ? 0 : 1;
}

std::string format_cell(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void write_synthetic_csv(const adkrr::ExperimentConfig& config,
                         const std::string& out_path, Eigen::Index rows,
                         std::uint64_t seed) {
  const adkrr::SyntheticSpec& spec = config.data.synthetic;
  const Eigen::Index n = rows > 0 ? rows : spec.train_n;
  const adkrr::SyntheticSample sample =
      adkrr::gen_synthetic(spec.target, n, spec.dim, spec.noise_std, seed);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw adkrr::IoError("cannot write " + out_path);
  for (Eigen::Index k = 0; k < spec.dim; ++k) out << 'x' << (k + 1) << ',';
  out << "y\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < spec.dim; ++k) {
      out << format_cell(sample.data.inputs(i, k)) << ',';
    }
    out << format_cell(sample.data.outputs[i]) << '\n';
  }
}

void write_schema_csv(const adkrr::PreprocessDoc& doc,
                      const std::string& out_path, Eigen::Index rows,
                      std::uint64_t seed) {
  Eigen::Index max_col = 0;
  for (Eigen::Index c : doc.schema.input_columns) {
    max_col = std::max(max_col, c);
  }
  for (Eigen::Index c : doc.schema.target_columns) {
    max_col = std::max(max_col, c);
  }

  // Per-column value ranges: binned columns draw from their covered range
  // so every bin is reachable, targets stay positive for the log transform.
  std::vector<double> lo(static_cast<std::size_t>(max_col) + 1, 0.0);
  std::vector<double> hi(static_cast<std::size_t>(max_col) + 1, 1.0);
  for (const adkrr::ColumnBinRule& rule : doc.bins) {
    const auto raw = static_cast<std::size_t>(
        doc.schema.input_columns[static_cast<std::size_t>(rule.column)]);
    lo[raw] = rule.spec.edges.front();
    hi[raw] = rule.spec.unbounded_last ? rule.spec.edges.back() * 1.2
                                       : rule.spec.edges.back();
  }
  std::vector<bool> is_target(static_cast<std::size_t>(max_col) + 1, false);
  for (Eigen::Index c : doc.schema.target_columns) {
    is_target[static_cast<std::size_t>(c)] = true;
  }

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw adkrr::IoError("cannot write " + out_path);
  for (Eigen::Index c = 0; c <= max_col; ++c) {
    out << 'c' << c << (c == max_col ? '\n' : ',');
  }
  std::mt19937_64 eng(seed);
  const Eigen::Index n = rows > 0 ? rows : 100;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c <= max_col; ++c) {
      const auto idx = static_cast<std::size_t>(c);
      double value;
      if (is_target[idx]) {
        value = std::exp(adkrr::rng::gaussian(eng));
      } else {
        value = lo[idx] + adkrr::rng::uniform01(eng) * (hi[idx] - lo[idx]);
      }
      out << format_cell(value) << (c == max_col ? '\n' : ',');
    }
  }
}

int gen_data(const std::string& preset, const std::string& out_path,
             Eigen::Index rows, std::uint64_t seed) {
  const fs::path file = resolve_preset_file(preset);

  // Experiment presets carry a "data" block; schema presets are the
  // preprocessing document itself.
  std::ifstream probe(file);
  if (!probe) throw adkrr::IoError("cannot open " + file.string());
  nlohmann::json doc;
  try {
    probe >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw adkrr::ConfigError(file.string() + ": " + e.what());
  }

  if (doc.contains("data")) {
    const adkrr::ExperimentConfig config = adkrr::load_config(file.string());
    if (config.data.kind != adkrr::DataSpec::Kind::Synthetic) {
      throw adkrr::ConfigError(
          "gen-data needs a synthetic or schema preset, got a csv config");
    }
    write_synthetic_csv(config, out_path, rows, seed);
  } else {
    write_schema_csv(adkrr::load_preprocess_doc(file.string()), out_path,
                     rows, seed);
  }
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed kernel ridge regression experiment harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  CLI::App* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "JSON experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out-dir", out_dir,
                  "Output directory (default out/<config name>)");
  CLI::Option* seed_opt =
      run->add_option("--seed", seed, "Override the config's master seed");
  run->add_option("--threads", threads,
                  "Machine-level worker threads (0 = all hardware threads)");

  CLI::App* presets = app.add_subcommand("presets", "Bundled presets");
  presets->require_subcommand(1);
  std::string presets_dir;
  CLI::App* list = presets->add_subcommand("list", "List bundled presets");
  list->add_option("--dir", presets_dir, "Presets directory to list");

  std::string gen_preset;
  std::string gen_out;
  Eigen::Index gen_rows = 0;
  std::uint64_t gen_seed = 0;
  CLI::App* gen =
      app.add_subcommand("gen-data", "Write a synthetic CSV for a preset");
  gen->add_option("preset", gen_preset, "Preset name or JSON file")
      ->required();
  gen->add_option("output", gen_out, "Output CSV path")->required();
  gen->add_option("--rows", gen_rows, "Row count (default: preset size)");
  gen->add_option("--seed", gen_seed, "Generation seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      return run_config(config_path, out_dir, seed_opt->count() > 0, seed,
                        threads);
    }
    if (list->parsed()) return list_presets(presets_dir);
    if (gen->parsed()) return gen_data(gen_preset, gen_out, gen_rows, gen_seed);
  } catch (const adkrr::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
