#pragma once

#include <Eigen/Dense>

#include "adkrr/common.hpp"

namespace adkrr {

enum class KernelFamily { Wendland, Gaussian };

/// Kernel choice shared by every machine in a run. sigma is the Gaussian
/// width (the 2*sigma^2 denominator); the Wendland kernel ignores it.
struct KernelSpec {
  KernelFamily family = KernelFamily::Wendland;
  double sigma = 1.0;

  static KernelSpec wendland() { return {KernelFamily::Wendland, 1.0}; }
  static KernelSpec gaussian(double sigma) {
    return {KernelFamily::Gaussian, sigma};
  }
};

/// Throws DomainError if the spec is unusable (non-positive Gaussian width).
void validate(const KernelSpec& spec);

/// k(x, y). Wendland: (1-r)^4 (4r+1) for r <= 1 and 0 beyond, r = |x-y|_2.
/// Gaussian: exp(-|x-y|^2 / (2 sigma^2)). Both give k(x, x) = 1.
double eval_kernel(const KernelSpec& spec,
                   const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

/// |A| x |B| matrix of pairwise kernel values; rows of A and B are points.
/// When A and B alias the same storage the result is symmetric by
/// construction (upper triangle computed once and mirrored).
Eigen::MatrixXd gram(const KernelSpec& spec,
                     const Eigen::Ref<const Eigen::MatrixXd>& a,
                     const Eigen::Ref<const Eigen::MatrixXd>& b);

}  // namespace adkrr
