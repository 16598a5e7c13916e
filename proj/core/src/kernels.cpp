#include "adkrr/kernels.hpp"

#include <cmath>

namespace adkrr {

void validate(const KernelSpec& spec) {
  if (spec.family == KernelFamily::Gaussian &&
      !(spec.sigma > 0.0 && std::isfinite(spec.sigma))) {
    throw DomainError("Gaussian kernel width must be positive and finite");
  }
}

namespace {

// Compactly supported piece; h(0) = 1, h(r) = 0 for r >= 1, continuous at 1.
inline double wendland_h(double r) {
  if (r >= 1.0) return 0.0;
  const double t = 1.0 - r;
  const double t2 = t * t;
  return t2 * t2 * (4.0 * r + 1.0);
}

inline double kernel_from_d2(const KernelSpec& spec, double squared_dist) {
  if (spec.family == KernelFamily::Wendland) {
    return wendland_h(std::sqrt(squared_dist));
  }
  return std::exp(-squared_dist / (2.0 * spec.sigma * spec.sigma));
}

}  // namespace

double eval_kernel(const KernelSpec& spec,
                   const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  validate(spec);
  if (x.size() != y.size()) {
    throw ShapeError("eval_kernel: point dimensions disagree (" +
                     std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  }
  return kernel_from_d2(spec, (x - y).squaredNorm());
}

Eigen::MatrixXd gram(const KernelSpec& spec,
                     const Eigen::Ref<const Eigen::MatrixXd>& a,
                     const Eigen::Ref<const Eigen::MatrixXd>& b) {
  validate(spec);
  if (a.cols() != b.cols()) {
    throw ShapeError("gram: point dimensions disagree (" +
                     std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()) + ")");
  }
  Eigen::MatrixXd out(a.rows(), b.rows());
  const bool aliased = a.data() == b.data() && a.rows() == b.rows() &&
                       a.outerStride() == b.outerStride();
  if (aliased) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out(i, i) = 1.0;
      for (Eigen::Index k = i + 1; k < a.rows(); ++k) {
        const double v =
            kernel_from_d2(spec, (a.row(i) - a.row(k)).squaredNorm());
        out(i, k) = v;
        out(k, i) = v;
      }
    }
  } else {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index k = 0; k < b.rows(); ++k) {
        out(i, k) = kernel_from_d2(spec, (a.row(i) - b.row(k)).squaredNorm());
      }
    }
  }
  return out;
}

}  // namespace adkrr
