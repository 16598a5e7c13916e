#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "adkrr/approx.hpp"
#include "adkrr/krr.hpp"

namespace adkrr {

/// One point of the hyperparameter grid. For the Gaussian kernel a candidate
/// couples a regularization value with a width, so the grid is the Cartesian
/// product of the two lists.
struct GridCandidate {
  double lambda = 1.0;
  KernelSpec kernel;
};

/// Ordered candidate list; the index of a candidate is part of the protocol
/// (all machines must agree on it).
struct ParamGrid {
  std::vector<GridCandidate> candidates;

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(candidates.size());
  }
};

/// Successive powers base^-q, q = 0, 1, ..., stopping before the value drops
/// below `floor`. Descending order.
std::vector<double> lambda_power_grid(double base, double floor = 1e-10);

/// `count` log-spaced values covering [lo, hi] inclusive.
std::vector<double> log_spaced(double lo, double hi, int count);

/// Cartesian product, lambda-major: for each lambda (descending), one
/// candidate per kernel in list order.
ParamGrid cartesian_grid(const std::vector<double>& lambdas,
                         const std::vector<KernelSpec>& kernels);

/// Named grids used by the bundled experiment presets:
///   wendland-d3    lambda in {2^-q >= 1e-10}, Wendland kernel
///   gaussian-d10   lambda in {3^-q >= 1e-10}, sigma 10 log-spaced in [0.1,10]
///   gaussian-car   lambda in {3^-q >= 1e-10}, sigma 10 log-spaced in [1,10]
///   gaussian-sgemm lambda in {5^-q >= 1e-10}, sigma 10 log-spaced in [1,100]
ParamGrid preset_grid(std::string_view name);

/// How a shard is divided for validation.
struct SplitPlan {
  enum class Kind { HoldOut, KFold };
  Kind kind = Kind::HoldOut;
  double train_fraction = 0.5;  // HoldOut only
  int folds = 5;                // KFold only
  std::uint64_t seed = 0;

  static SplitPlan hold_out(double train_fraction, std::uint64_t seed) {
    return {Kind::HoldOut, train_fraction, 0, seed};
  }
  static SplitPlan k_fold(int folds, std::uint64_t seed) {
    return {Kind::KFold, 0.0, folds, seed};
  }
};

struct IndexSplit {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> val;
};

/// HoldOut yields one pair with |train| = round(train_fraction * n); KFold
/// yields `folds` pairs whose validation sets partition 0..n-1. Both are a
/// pure function of (n, plan).
std::vector<IndexSplit> split(Eigen::Index n, const SplitPlan& plan);

/// Argmin with ties broken toward the larger lambda, then the earlier index.
Eigen::Index pick_best(const Eigen::Ref<const Eigen::VectorXd>& errors,
                       const ParamGrid& grid);

struct ValidationResult {
  Eigen::VectorXd errors;  // one MSE per grid candidate
  Eigen::Index best_index = 0;
};

/// Validation MSE of the truncated global expansion per candidate: column l
/// of the coefficient matrix evaluated with candidate l's kernel.
ValidationResult validate_global(
    const Eigen::Ref<const Eigen::MatrixXd>& global_coeffs,
    const ParamGrid& grid, const CenterSet& centers, const DataSet& val_data,
    double bound);

struct LocalSelection {
  Eigen::Index index = 0;
  GridCandidate candidate;
  Eigen::VectorXd mean_errors;
};

/// Per-machine selection with no communication: plain cross-validated KRR on
/// the shard itself.
LocalSelection local_cv_select(const DataSet& shard, const ParamGrid& grid,
                               const SplitPlan& plan);

struct TransformedParams {
  double lambda = 0.0;
  double sigma = 0.0;  // unchanged copy when no width was given
};

/// Raise lambda (and the Gaussian width, when given) to the power
/// ln(total_n)/ln(shard_n), pushing a locally selected parameter toward the
/// whole-data scale. Accepts lambda in (0, 1]; underflow clamps to 1e-10.
TransformedParams log_transform(double lambda, std::optional<double> sigma,
                                Eigen::Index total_n, Eigen::Index shard_n);

}  // namespace adkrr
