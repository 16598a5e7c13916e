#include "adkrr/approx.hpp"

#include <cmath>
#include <cstring>

namespace adkrr {

namespace {
constexpr double kSpectralCutoff = 1e-12;
}

Eigen::VectorXd eval_expansion(
    const BasisExpansion& expansion,
    const Eigen::Ref<const Eigen::MatrixXd>& queries) {
  return gram(expansion.kernel, queries, expansion.centers->points) *
         expansion.coeffs;
}

LocalApproxSolver::LocalApproxSolver(
    const KernelSpec& kernel,
    const Eigen::Ref<const Eigen::MatrixXd>& anchor_points,
    std::shared_ptr<const CenterSet> centers, double mu)
    : centers_(std::move(centers)) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw DomainError("local approximation: mu must be positive and finite");
  }
  if (anchor_points.rows() < 1 || centers_->points.rows() < 1) {
    throw DomainError("local approximation: empty anchor or center set");
  }
  const Eigen::Index s = anchor_points.rows();
  k_sn_ = gram(kernel, anchor_points, centers_->points);
  const Eigen::MatrixXd k_nn =
      gram(kernel, centers_->points, centers_->points);
  const Eigen::MatrixXd normal =
      k_sn_.transpose() * k_sn_ + (mu * static_cast<double>(s)) * k_nn;

  // Pseudo-inverse through the symmetric eigendecomposition; eigenvalues
  // below cutoff * lambda_max are treated as exact zeros.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal);
  if (eig.info() != Eigen::Success) {
    throw NumericError("local approximation: eigendecomposition failed");
  }
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double top = values.cwiseAbs().maxCoeff();
  const double cut = kSpectralCutoff * top;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] > cut) inv[i] = 1.0 / values[i];
  }
  eigvecs_ = eig.eigenvectors();
  inv_basis_ = eigvecs_ * inv.asDiagonal();
}

Eigen::VectorXd LocalApproxSolver::solve(
    const Eigen::Ref<const Eigen::VectorXd>& anchor_values) const {
  if (anchor_values.size() != k_sn_.rows()) {
    throw ShapeError("local approximation: anchor-value length mismatch");
  }
  const Eigen::VectorXd rhs = k_sn_.transpose() * anchor_values;
  return inv_basis_ * (eigvecs_.transpose() * rhs);
}

BasisExpansion fit_local_approx(
    const DualEstimator& est,
    const Eigen::Ref<const Eigen::MatrixXd>& anchor_points,
    std::shared_ptr<const CenterSet> centers, double mu) {
  const LocalApproxSolver solver(est.kernel, anchor_points, centers, mu);
  BasisExpansion expansion;
  expansion.centers = std::move(centers);
  expansion.kernel = est.kernel;
  expansion.coeffs = solver.solve(predict(est, anchor_points));
  return expansion;
}

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>((value >> (8 * i)) & 0xffu));
  }
}

std::uint64_t get_u64(const std::uint8_t* bytes) {
  std::uint64_t value = 0;
  for (int i = 0; i < 8; ++i) {
    value |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  }
  return value;
}

}  // namespace

std::vector<std::uint8_t> serialize(const CoeffMatrix& payload) {
  const auto n = static_cast<std::uint64_t>(payload.coeffs.rows());
  const auto l = static_cast<std::uint64_t>(payload.coeffs.cols());
  std::vector<std::uint8_t> out;
  out.reserve(32 + 8 * n * l);
  put_u64(out, n);
  put_u64(out, l);
  put_u64(out, static_cast<std::uint64_t>(payload.weight_num));
  put_u64(out, static_cast<std::uint64_t>(payload.weight_den));
  for (Eigen::Index c = 0; c < payload.coeffs.cols(); ++c) {
    for (Eigen::Index r = 0; r < payload.coeffs.rows(); ++r) {
      std::uint64_t bits;
      const double value = payload.coeffs(r, c);
      std::memcpy(&bits, &value, 8);
      put_u64(out, bits);
    }
  }
  return out;
}

CoeffMatrix deserialize_coeff_matrix(const std::uint8_t* bytes,
                                     std::size_t size) {
  if (size < 32) throw ParseError("coefficient payload: truncated header");
  const std::uint64_t n = get_u64(bytes);
  const std::uint64_t l = get_u64(bytes + 8);
  if (size != 32 + 8 * n * l) {
    throw ParseError("coefficient payload: size disagrees with header");
  }
  CoeffMatrix payload;
  payload.weight_num = static_cast<std::int64_t>(get_u64(bytes + 16));
  payload.weight_den = static_cast<std::int64_t>(get_u64(bytes + 24));
  payload.coeffs.resize(static_cast<Eigen::Index>(n),
                        static_cast<Eigen::Index>(l));
  const std::uint8_t* p = bytes + 32;
  for (Eigen::Index c = 0; c < payload.coeffs.cols(); ++c) {
    for (Eigen::Index r = 0; r < payload.coeffs.rows(); ++r) {
      const std::uint64_t bits = get_u64(p);
      p += 8;
      double value;
      std::memcpy(&value, &bits, 8);
      payload.coeffs(r, c) = value;
    }
  }
  return payload;
}

Eigen::MatrixXd synthesize(const std::vector<CoeffMatrix>& locals) {
  if (locals.empty()) {
    throw DomainError("synthesize: no coefficient matrices");
  }
  const Eigen::Index n = locals.front().coeffs.rows();
  const Eigen::Index l = locals.front().coeffs.cols();
  double weight_sum = 0.0;
  for (const CoeffMatrix& local : locals) {
    if (local.coeffs.rows() != n || local.coeffs.cols() != l) {
      throw ShapeError("synthesize: coefficient shapes disagree");
    }
    weight_sum += local.weight();
  }
  if (!(std::abs(weight_sum - 1.0) <= 1e-12)) {  // written to reject NaN too
    throw DomainError("synthesize: machine weights must sum to 1");
  }
  Eigen::MatrixXd global = Eigen::MatrixXd::Zero(n, l);
  for (const CoeffMatrix& local : locals) {  // fixed machine order
    global += local.weight() * local.coeffs;
  }
  return global;
}

}  // namespace adkrr
