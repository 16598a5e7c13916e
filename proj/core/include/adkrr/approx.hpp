#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "adkrr/krr.hpp"
#include "adkrr/qmc.hpp"

namespace adkrr {

/// A function in the shared fixed basis: x -> sum_k coeffs_k k(xi_k, x).
struct BasisExpansion {
  std::shared_ptr<const CenterSet> centers;
  KernelSpec kernel;
  Eigen::VectorXd coeffs;
};

Eigen::VectorXd eval_expansion(const BasisExpansion& expansion,
                               const Eigen::Ref<const Eigen::MatrixXd>& queries);

/// Regularized least-squares projection onto span{k(xi_k, .)}: minimizes
/// (1/s) sum_i (g(x*_i) - f_i)^2 + mu |g|_K^2. The normal matrix
/// K_sn' K_sn + mu*s*K_nn is factored once (symmetric eigendecomposition
/// with relative spectral cutoff 1e-12) and reused across right-hand sides,
/// which is what the per-candidate grid loops need.
class LocalApproxSolver {
 public:
  LocalApproxSolver(const KernelSpec& kernel,
                    const Eigen::Ref<const Eigen::MatrixXd>& anchor_points,
                    std::shared_ptr<const CenterSet> centers, double mu);

  /// Coefficients of the projection of the anchor-value vector.
  Eigen::VectorXd solve(
      const Eigen::Ref<const Eigen::VectorXd>& anchor_values) const;

  const Eigen::MatrixXd& anchor_gram() const { return k_sn_; }

 private:
  std::shared_ptr<const CenterSet> centers_;
  Eigen::MatrixXd k_sn_;       // anchors x centers
  Eigen::MatrixXd inv_basis_;  // eigvecs scaled by pseudo-inverted eigvals
  Eigen::MatrixXd eigvecs_;
};

/// Project a fitted estimator onto the shared basis by sampling it at the
/// anchor points.
BasisExpansion fit_local_approx(
    const DualEstimator& est,
    const Eigen::Ref<const Eigen::MatrixXd>& anchor_points,
    std::shared_ptr<const CenterSet> centers, double mu);

/// The only payload a machine sends upstream: one coefficient column per
/// grid candidate plus this machine's exact share of the training mass.
/// Nothing else about the shard is representable in this type.
struct CoeffMatrix {
  Eigen::MatrixXd coeffs;  // n x L
  std::int64_t weight_num = 0;
  std::int64_t weight_den = 1;

  double weight() const {
    return static_cast<double>(weight_num) / static_cast<double>(weight_den);
  }
};

/// Wire format: four little-endian uint64 words (n, L, weight numerator,
/// weight denominator) followed by n*L little-endian float64 coefficients in
/// column-major order.
std::vector<std::uint8_t> serialize(const CoeffMatrix& payload);
CoeffMatrix deserialize_coeff_matrix(const std::uint8_t* bytes,
                                     std::size_t size);

/// Entrywise weighted sum of the machines' coefficient matrices, accumulated
/// in list order. Weights must agree with the shapes and sum to 1
/// (tolerance 1e-12).
Eigen::MatrixXd synthesize(const std::vector<CoeffMatrix>& locals);

}  // namespace adkrr
