#include "adkrr/krr.hpp"

#include <cmath>

namespace adkrr {

DualEstimator fit_krr(const DataSet& data, const KernelSpec& kernel,
                      double lambda) {
  auto inputs = std::make_shared<const Eigen::MatrixXd>(data.inputs);
  const Eigen::MatrixXd kxx = gram(kernel, *inputs, *inputs);
  return fit_krr_with_gram(std::move(inputs), kxx, data.outputs, kernel,
                           lambda);
}

DualEstimator fit_krr_with_gram(std::shared_ptr<const Eigen::MatrixXd> inputs,
                                const Eigen::Ref<const Eigen::MatrixXd>& kxx,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                const KernelSpec& kernel, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("fit_krr: lambda must be positive and finite");
  }
  const Eigen::Index n = inputs->rows();
  if (kxx.rows() != n || kxx.cols() != n || y.size() != n) {
    throw ShapeError("fit_krr: gram/output sizes disagree with inputs");
  }
  Eigen::MatrixXd system = kxx;
  system.diagonal().array() += lambda * static_cast<double>(n);
  const Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) {
    throw NumericError("fit_krr: Cholesky factorization failed");
  }
  DualEstimator est;
  est.train_inputs = std::move(inputs);
  est.kernel = kernel;
  est.lambda = lambda;
  est.alpha = llt.solve(y);
  if (!est.alpha.allFinite()) {
    throw NumericError("fit_krr: solve produced non-finite coefficients");
  }
  return est;
}

Eigen::VectorXd predict(const DualEstimator& est,
                        const Eigen::Ref<const Eigen::MatrixXd>& queries) {
  return gram(est.kernel, queries, *est.train_inputs) * est.alpha;
}

Eigen::VectorXd truncate(const Eigen::Ref<const Eigen::VectorXd>& values,
                         double bound) {
  if (!(bound > 0.0) || !std::isfinite(bound)) {
    throw DomainError("truncate: bound must be positive and finite");
  }
  return values.cwiseMax(-bound).cwiseMin(bound);
}

}  // namespace adkrr
