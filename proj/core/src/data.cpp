#include "adkrr/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "adkrr/common.hpp"

namespace adkrr {

namespace {

double radial_target(TargetKind kind, double r) {
  switch (kind) {
    case TargetKind::G1: {
      if (r > 1.0) return 0.0;
      const double t = 1.0 - r;
      const double t2 = t * t;
      return t2 * t2 * t2 * ((35.0 * r + 18.0) * r + 3.0);
    }
    case TargetKind::G2:
      return (r - 1.0) * (r - 2.0) * (r - 3.0);
  }
  throw DomainError("eval_target: unknown target kind");
}

}  // namespace

double eval_target(TargetKind kind,
                   const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (!x.allFinite()) throw DomainError("eval_target: non-finite input");
  return radial_target(kind, x.norm());
}

Eigen::VectorXd eval_targets(TargetKind kind,
                             const Eigen::Ref<const Eigen::MatrixXd>& points) {
  if (!points.allFinite()) throw DomainError("eval_targets: non-finite input");
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out[i] = radial_target(kind, points.row(i).norm());
  }
  return out;
}

SyntheticSample gen_synthetic(TargetKind kind, Eigen::Index n, Eigen::Index d,
                              double noise_std, std::uint64_t seed) {
  if (n < 1 || d < 1) throw DomainError("gen_synthetic: need n >= 1, d >= 1");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw DomainError("gen_synthetic: noise_std must be finite and >= 0");
  }
  std::mt19937_64 eng(seed);
  SyntheticSample sample;
  sample.data.inputs.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      sample.data.inputs(i, k) = rng::uniform01(eng);
    }
  }
  sample.clean = eval_targets(kind, sample.data.inputs);
  sample.data.outputs.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sample.data.outputs[i] = sample.clean[i] + noise_std * rng::gaussian(eng);
  }
  return sample;
}

MinMaxScaler fit_minmax(const Eigen::Ref<const Eigen::MatrixXd>& train_cols) {
  if (train_cols.rows() < 1) throw ShapeError("fit_minmax: no rows");
  MinMaxScaler scaler;
  scaler.min = train_cols.colwise().minCoeff();
  scaler.max = train_cols.colwise().maxCoeff();
  for (Eigen::Index c = 0; c < train_cols.cols(); ++c) {
    if (!(scaler.max[c] > scaler.min[c])) {
      throw DomainError("fit_minmax: column " + std::to_string(c) +
                        " is constant on the training data");
    }
  }
  return scaler;
}

Eigen::MatrixXd apply_minmax(const MinMaxScaler& scaler,
                             const Eigen::Ref<const Eigen::MatrixXd>& cols,
                             bool clamp) {
  if (cols.cols() != scaler.min.size()) {
    throw ShapeError("apply_minmax: column count differs from the fit");
  }
  Eigen::MatrixXd out =
      (cols.rowwise() - scaler.min.transpose()).array().rowwise() /
      (scaler.max - scaler.min).transpose().array();
  if (clamp) out = out.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> fit_apply_minmax(
    const Eigen::Ref<const Eigen::MatrixXd>& train_cols,
    const Eigen::Ref<const Eigen::MatrixXd>& test_cols) {
  const MinMaxScaler scaler = fit_minmax(train_cols);
  return {apply_minmax(scaler, train_cols, false),
          apply_minmax(scaler, test_cols, true)};
}

Eigen::VectorXd bin_column(const Eigen::Ref<const Eigen::VectorXd>& values,
                           const BinSpec& spec,
                           const std::vector<double>& labels) {
  if (spec.edges.size() < 2) {
    throw DomainError("bin_column: need at least two edges");
  }
  for (std::size_t k = 1; k < spec.edges.size(); ++k) {
    if (!(spec.edges[k] > spec.edges[k - 1])) {
      throw DomainError("bin_column: edges must be strictly increasing");
    }
  }
  const std::size_t bins = spec.bin_count();
  if (!labels.empty() && labels.size() != bins) {
    throw ShapeError("bin_column: one label per bin required");
  }

  Eigen::VectorXd out(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v) || v < spec.edges.front()) {
      throw DomainError("bin_column: value " + std::to_string(v) + " at row " +
                        std::to_string(i) + " falls below the first bin");
    }
    // Right-closed bins: the bin index is the position of the first interior
    // edge >= v. The first bin absorbs its left edge.
    const auto it =
        std::lower_bound(spec.edges.begin() + 1, spec.edges.end(), v);
    std::size_t k = static_cast<std::size_t>(it - (spec.edges.begin() + 1));
    if (it == spec.edges.end()) {
      if (!spec.unbounded_last) {
        throw DomainError("bin_column: value " + std::to_string(v) +
                          " at row " + std::to_string(i) +
                          " exceeds the last bin");
      }
      k = bins - 1;
    }
    out[i] = labels.empty() ? static_cast<double>(k) : labels[k];
  }
  return out;
}

BinSpec usage_time_bins() {
  return {{0.0, 90.0, 180.0, 365.0, 730.0, 1095.0, 1460.0, 2190.0, 3650.0,
           5475.0},
          true};
}

BinSpec power_bins() {
  return {{-19.3, 1931.2, 3862.4, 5793.6, 7724.8, 9656.0, 11587.2, 13518.4,
           15449.6, 17380.8, 19312.0},
          false};
}

Eigen::VectorXd log_target(const Eigen::Ref<const Eigen::VectorXd>& values) {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) {
      throw DomainError("log_target: value at row " + std::to_string(i) +
                        " is not positive");
    }
  }
  return values.array().log();
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool parse_cell(const std::string& raw, double& out) {
  std::size_t first = raw.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return false;
  std::size_t last = raw.find_last_not_of(" \t\r\"");
  const std::string body = raw.substr(first, last - first + 1);
  const char* begin = body.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + body.size() && std::isfinite(out);
}

}  // namespace

DataSet load_csv(const std::string& path, const CsvSchema& schema) {
  if (schema.input_columns.empty() || schema.target_columns.empty()) {
    throw ConfigError("csv schema: input and target columns must be nonempty");
  }
  Eigen::Index max_col = 0;
  for (Eigen::Index c : schema.input_columns) max_col = std::max(max_col, c);
  for (Eigen::Index c : schema.target_columns) max_col = std::max(max_col, c);

  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::vector<std::vector<double>> input_rows;
  std::vector<double> targets;
  std::string line;
  std::size_t lineno = 0;
  bool saw_any_row = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);

    const bool first_row = !saw_any_row;
    saw_any_row = true;
    if (static_cast<Eigen::Index>(fields.size()) <= max_col) {
      if (first_row) continue;  // short header row
      throw ParseError(path + " row " + std::to_string(lineno) +
                       ": expected at least " + std::to_string(max_col + 1) +
                       " columns, found " + std::to_string(fields.size()));
    }

    std::vector<double> inputs(schema.input_columns.size());
    double target_sum = 0.0;
    bool numeric = true;
    Eigen::Index bad_col = 0;
    for (std::size_t k = 0; k < schema.input_columns.size() && numeric; ++k) {
      const Eigen::Index c = schema.input_columns[k];
      if (!parse_cell(fields[static_cast<std::size_t>(c)], inputs[k])) {
        numeric = false;
        bad_col = c;
      }
    }
    for (std::size_t k = 0; k < schema.target_columns.size() && numeric; ++k) {
      const Eigen::Index c = schema.target_columns[k];
      double v = 0.0;
      if (!parse_cell(fields[static_cast<std::size_t>(c)], v)) {
        numeric = false;
        bad_col = c;
      }
      target_sum += v;
    }
    if (!numeric) {
      if (first_row) continue;  // header row
      throw ParseError(path + " row " + std::to_string(lineno) + ", column " +
                       std::to_string(bad_col) + ": not numeric");
    }
    input_rows.push_back(std::move(inputs));
    targets.push_back(target_sum /
                      static_cast<double>(schema.target_columns.size()));
  }
  if (input_rows.empty()) {
    throw ParseError(path + ": no data rows");
  }

  DataSet out;
  out.inputs.resize(static_cast<Eigen::Index>(input_rows.size()),
                    static_cast<Eigen::Index>(schema.input_columns.size()));
  out.outputs.resize(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t i = 0; i < input_rows.size(); ++i) {
    for (std::size_t k = 0; k < input_rows[i].size(); ++k) {
      out.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          input_rows[i][k];
    }
    out.outputs[static_cast<Eigen::Index>(i)] = targets[i];
  }
  return out;
}

PreprocessDoc load_preprocess_doc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }

  PreprocessDoc out;
  try {
    out.schema.input_columns =
        doc.at("inputs").get<std::vector<Eigen::Index>>();
    out.schema.target_columns =
        doc.at("targets").get<std::vector<Eigen::Index>>();
    out.minmax = doc.value("minmax", true);
    out.log_target = doc.value("log_target", false);
    for (const auto& node : doc.value("bins", nlohmann::json::array())) {
      ColumnBinRule rule;
      rule.column = node.at("column").get<Eigen::Index>();
      if (node.contains("preset")) {
        const std::string preset = node.at("preset").get<std::string>();
        if (preset == "usage-time") {
          rule.spec = usage_time_bins();
        } else if (preset == "power") {
          rule.spec = power_bins();
        } else {
          throw ConfigError(path + ": unknown bin preset \"" + preset + "\"");
        }
      } else {
        rule.spec.edges = node.at("edges").get<std::vector<double>>();
        rule.spec.unbounded_last = node.value("unbounded_last", false);
      }
      if (rule.column < 0 ||
          rule.column >=
              static_cast<Eigen::Index>(out.schema.input_columns.size())) {
        throw ConfigError(path + ": bin rule column out of range");
      }
      out.bins.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return out;
}

DataSet load_dataset(const std::string& csv_path, const PreprocessDoc& doc) {
  DataSet data = load_csv(csv_path, doc.schema);
  for (const ColumnBinRule& rule : doc.bins) {
    data.inputs.col(rule.column) =
        bin_column(data.inputs.col(rule.column), rule.spec);
  }
  if (doc.log_target) data.outputs = log_target(data.outputs);
  return data;
}

}  // namespace adkrr
