#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "adkrr/krr.hpp"

namespace adkrr {

enum class TargetKind { G1, G2 };

/// Both targets are radial. G1 is the compactly supported bump
/// (1-r)^6 (35r^2 + 18r + 3) on the unit ball (value 3 at the origin, zero
/// outside); G2 is the cubic (r-1)(r-2)(r-3).
double eval_target(TargetKind kind, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd eval_targets(TargetKind kind,
                             const Eigen::Ref<const Eigen::MatrixXd>& points);

struct SyntheticSample {
  DataSet data;             // outputs carry the additive noise
  Eigen::VectorXd clean;    // noise-free targets, for test-MSE use
};

/// Inputs i.i.d. uniform on [0,1]^d, outputs = target + noise_std * N(0,1).
/// A fixed seed reproduces the sample bit for bit.
SyntheticSample gen_synthetic(TargetKind kind, Eigen::Index n, Eigen::Index d,
                              double noise_std, std::uint64_t seed);

/// Per-column training extrema for min-max rescaling.
struct MinMaxScaler {
  Eigen::VectorXd min;
  Eigen::VectorXd max;
};

/// Throws on a constant column, naming it: such a column carries no
/// information and would divide by zero.
MinMaxScaler fit_minmax(const Eigen::Ref<const Eigen::MatrixXd>& train_cols);

/// (x - min) / (max - min) per column; with clamp, results are forced into
/// [0,1] (used for test columns, whose values may fall outside the training
/// extrema).
Eigen::MatrixXd apply_minmax(const MinMaxScaler& scaler,
                             const Eigen::Ref<const Eigen::MatrixXd>& cols,
                             bool clamp);

/// Fit on the training columns, rescale both; test columns are clamped.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> fit_apply_minmax(
    const Eigen::Ref<const Eigen::MatrixXd>& train_cols,
    const Eigen::Ref<const Eigen::MatrixXd>& test_cols);

/// Bin k covers (edges[k], edges[k+1]], except the first bin which is closed
/// on the left. With unbounded_last, one extra bin (edges.back(), +inf) is
/// appended.
struct BinSpec {
  std::vector<double> edges;  // strictly increasing
  bool unbounded_last = false;

  std::size_t bin_count() const {
    return edges.size() - 1 + (unbounded_last ? 1 : 0);
  }
};

/// Map each value to its bin's label. Labels default to 0, 1, ... when the
/// label list is empty. Values outside the covered range raise an error
/// rather than clamp.
Eigen::VectorXd bin_column(const Eigen::Ref<const Eigen::VectorXd>& values,
                           const BinSpec& spec,
                           const std::vector<double>& labels = {});

/// The two bundled binning tables for the used-car features.
BinSpec usage_time_bins();
BinSpec power_bins();

/// Natural log elementwise; any value <= 0 is an error.
Eigen::VectorXd log_target(const Eigen::Ref<const Eigen::VectorXd>& values);

/// Which CSV columns feed the model. Multiple target columns are averaged
/// row-wise before any transform.
struct CsvSchema {
  std::vector<Eigen::Index> input_columns;
  std::vector<Eigen::Index> target_columns;
};

/// Comma-separated text, first row treated as a header when its referenced
/// cells do not all parse as numbers. Errors name the offending row and
/// column.
DataSet load_csv(const std::string& path, const CsvSchema& schema);

/// One input column to replace with bin labels before normalization.
struct ColumnBinRule {
  Eigen::Index column = 0;  // index into the input matrix, not the CSV
  BinSpec spec;
};

/// Declarative description of an ingestion pipeline: schema, binning rules,
/// normalization and target transform flags. Loaded from a JSON document.
struct PreprocessDoc {
  CsvSchema schema;
  std::vector<ColumnBinRule> bins;
  bool minmax = true;
  bool log_target = false;
};

PreprocessDoc load_preprocess_doc(const std::string& path);

/// Load the CSV and apply the fixed (non-fitted) transforms: binning and the
/// log target. Min-max fitting is left to the caller, which knows the
/// train/test division.
DataSet load_dataset(const std::string& csv_path, const PreprocessDoc& doc);

}  // namespace adkrr
