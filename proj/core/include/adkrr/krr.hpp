#pragma once

#include <Eigen/Dense>
#include <memory>

#include "adkrr/kernels.hpp"

namespace adkrr {

/// One silo's samples: inputs are rows in [0,1]^d, outputs the matching
/// responses.
struct DataSet {
  Eigen::MatrixXd inputs;   // N x d
  Eigen::VectorXd outputs;  // N

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
};

/// A fitted kernel ridge regressor in dual form: f = sum_i alpha_i k(x_i, .).
/// Training inputs are shared, not copied, so a grid of fits over one shard
/// stays cheap.
struct DualEstimator {
  std::shared_ptr<const Eigen::MatrixXd> train_inputs;
  KernelSpec kernel;
  double lambda = 0.0;
  Eigen::VectorXd alpha;
};

/// Solves (K + lambda*N*I) alpha = y by Cholesky; the ridge term makes the
/// system positive definite for any lambda > 0.
DualEstimator fit_krr(const DataSet& data, const KernelSpec& kernel,
                      double lambda);

/// Same solve with a precomputed gram(kernel, X, X); used by the grid loops
/// where many lambdas share one kernel matrix.
DualEstimator fit_krr_with_gram(std::shared_ptr<const Eigen::MatrixXd> inputs,
                                const Eigen::Ref<const Eigen::MatrixXd>& kxx,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                const KernelSpec& kernel, double lambda);

/// Entry q is sum_i alpha_i k(x_i, query_q).
Eigen::VectorXd predict(const DualEstimator& est,
                        const Eigen::Ref<const Eigen::MatrixXd>& queries);

/// Clamp each value to [-bound, bound], keeping its sign.
Eigen::VectorXd truncate(const Eigen::Ref<const Eigen::VectorXd>& values,
                         double bound);

}  // namespace adkrr
