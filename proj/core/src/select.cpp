#include "adkrr/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <utility>

#include "adkrr/common.hpp"
#include "adkrr/kernels.hpp"

namespace adkrr {

namespace {

using KernelKey = std::pair<int, double>;

KernelKey key_of(const KernelSpec& k) {
  return {static_cast<int>(k.family),
          k.family == KernelFamily::Gaussian ? k.sigma : 0.0};
}

Eigen::MatrixXd gather_rows(const Eigen::Ref<const Eigen::MatrixXd>& m,
                            const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  }
  return out;
}

Eigen::VectorXd gather(const Eigen::Ref<const Eigen::VectorXd>& v,
                       const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = v[rows[i]];
  }
  return out;
}

}  // namespace

std::vector<double> lambda_power_grid(double base, double floor) {
  if (!(base > 1.0) || !std::isfinite(base)) {
    throw DomainError("lambda_power_grid: base must be > 1");
  }
  if (!(floor > 0.0)) {
    throw DomainError("lambda_power_grid: floor must be > 0");
  }
  std::vector<double> out;
  for (int q = 0;; ++q) {
    const double v = std::pow(base, -static_cast<double>(q));
    if (v < floor) break;
    out.push_back(v);
  }
  return out;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo)) {
    throw DomainError("log_spaced: need 0 < lo < hi");
  }
  if (count < 2) throw DomainError("log_spaced: count must be >= 2");
  std::vector<double> out(static_cast<std::size_t>(count));
  const double llo = std::log(lo);
  const double step = (std::log(hi) - llo) / (count - 1);
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = std::exp(llo + i * step);
  }
  out.front() = lo;  // exp(log(x)) can drift off the endpoints by an ulp
  out.back() = hi;
  return out;
}

ParamGrid cartesian_grid(const std::vector<double>& lambdas,
                         const std::vector<KernelSpec>& kernels) {
  if (lambdas.empty() || kernels.empty()) {
    throw DomainError("cartesian_grid: empty axis");
  }
  ParamGrid grid;
  grid.candidates.reserve(lambdas.size() * kernels.size());
  for (double lam : lambdas) {
    if (!(lam > 0.0) || !std::isfinite(lam)) {
      throw DomainError("cartesian_grid: lambda must be positive and finite");
    }
    for (const KernelSpec& k : kernels) {
      validate(k);
      grid.candidates.push_back({lam, k});
    }
  }
  return grid;
}

ParamGrid preset_grid(std::string_view name) {
  auto gaussians = [](double lo, double hi) {
    std::vector<KernelSpec> ks;
    for (double s : log_spaced(lo, hi, 10)) {
      ks.push_back(KernelSpec::gaussian(s));
    }
    return ks;
  };
  if (name == "wendland-d3") {
    return cartesian_grid(lambda_power_grid(2.0), {KernelSpec::wendland()});
  }
  if (name == "gaussian-d10") {
    return cartesian_grid(lambda_power_grid(3.0), gaussians(0.1, 10.0));
  }
  if (name == "gaussian-car") {
    return cartesian_grid(lambda_power_grid(3.0), gaussians(1.0, 10.0));
  }
  if (name == "gaussian-sgemm") {
    return cartesian_grid(lambda_power_grid(5.0), gaussians(1.0, 100.0));
  }
  throw ConfigError("unknown grid preset \"" + std::string(name) +
                    "\" (expected wendland-d3, gaussian-d10, gaussian-car or "
                    "gaussian-sgemm)");
}

std::vector<IndexSplit> split(Eigen::Index n, const SplitPlan& plan) {
  if (plan.kind == SplitPlan::Kind::HoldOut) {
    if (n < 2) throw DomainError("split: hold-out needs at least 2 points");
    if (!(plan.train_fraction > 0.0) || !(plan.train_fraction < 1.0)) {
      throw DomainError("split: train_fraction must lie in (0, 1)");
    }
    const auto train_count = static_cast<Eigen::Index>(
        std::llround(plan.train_fraction * static_cast<double>(n)));
    if (train_count < 1 || train_count >= n) {
      throw DomainError("split: hold-out would leave an empty side");
    }
    auto perm = rng::shuffled_indices(n, plan.seed);
    IndexSplit s;
    s.train.assign(perm.begin(), perm.begin() + train_count);
    s.val.assign(perm.begin() + train_count, perm.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    return {std::move(s)};
  }

  if (plan.folds < 2) throw DomainError("split: need at least 2 folds");
  if (n < plan.folds) {
    throw DomainError("split: fewer points than folds");
  }
  auto perm = rng::shuffled_indices(n, plan.seed);
  const Eigen::Index base = n / plan.folds;
  const Eigen::Index rem = n % plan.folds;
  std::vector<IndexSplit> out(static_cast<std::size_t>(plan.folds));
  Eigen::Index offset = 0;
  for (int f = 0; f < plan.folds; ++f) {
    const Eigen::Index len = base + (f < rem ? 1 : 0);
    IndexSplit& s = out[static_cast<std::size_t>(f)];
    s.val.assign(perm.begin() + offset, perm.begin() + offset + len);
    s.train.reserve(static_cast<std::size_t>(n - len));
    s.train.insert(s.train.end(), perm.begin(), perm.begin() + offset);
    s.train.insert(s.train.end(), perm.begin() + offset + len, perm.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    offset += len;
  }
  return out;
}

Eigen::Index pick_best(const Eigen::Ref<const Eigen::VectorXd>& errors,
                       const ParamGrid& grid) {
  if (errors.size() != grid.size() || errors.size() == 0) {
    throw ShapeError("pick_best: one error per grid candidate required");
  }
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < errors.size(); ++i) {
    if (!std::isfinite(errors[i])) continue;
    if (best < 0 || errors[i] < errors[best] ||
        (errors[i] == errors[best] &&
         grid.candidates[static_cast<std::size_t>(i)].lambda >
             grid.candidates[static_cast<std::size_t>(best)].lambda)) {
      best = i;
    }
  }
  if (best < 0) {
    throw NumericError("pick_best: no candidate produced a finite error");
  }
  return best;
}

ValidationResult validate_global(
    const Eigen::Ref<const Eigen::MatrixXd>& global_coeffs,
    const ParamGrid& grid, const CenterSet& centers, const DataSet& val_data,
    double bound) {
  if (global_coeffs.rows() != centers.points.rows()) {
    throw ShapeError("validate_global: coefficient rows != center count");
  }
  if (global_coeffs.cols() != grid.size()) {
    throw ShapeError("validate_global: one coefficient column per candidate");
  }
  if (val_data.size() == 0) {
    throw ShapeError("validate_global: empty validation set");
  }
  if (val_data.dim() != centers.points.cols()) {
    throw ShapeError("validate_global: dimension mismatch with centers");
  }
  if (!(bound > 0.0) || !std::isfinite(bound)) {
    throw DomainError("validate_global: bound must be positive and finite");
  }

  std::map<KernelKey, Eigen::MatrixXd> cross;
  ValidationResult result;
  result.errors.resize(grid.size());
  const double denom = static_cast<double>(val_data.size());
  for (Eigen::Index l = 0; l < grid.size(); ++l) {
    const GridCandidate& cand = grid.candidates[static_cast<std::size_t>(l)];
    auto [it, inserted] = cross.try_emplace(key_of(cand.kernel));
    if (inserted) {
      it->second = gram(cand.kernel, val_data.inputs, centers.points);
    }
    const Eigen::VectorXd pred =
        truncate(it->second * global_coeffs.col(l), bound);
    result.errors[l] = (pred - val_data.outputs).squaredNorm() / denom;
  }
  result.best_index = pick_best(result.errors, grid);
  return result;
}

LocalSelection local_cv_select(const DataSet& shard, const ParamGrid& grid,
                               const SplitPlan& plan) {
  const auto folds = split(shard.size(), plan);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(grid.size());
  for (const IndexSplit& fold : folds) {
    auto train_inputs = std::make_shared<Eigen::MatrixXd>(
        gather_rows(shard.inputs, fold.train));
    const Eigen::VectorXd train_y = gather(shard.outputs, fold.train);
    const Eigen::MatrixXd val_inputs = gather_rows(shard.inputs, fold.val);
    const Eigen::VectorXd val_y = gather(shard.outputs, fold.val);
    const double denom = static_cast<double>(val_y.size());

    std::map<KernelKey, std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> grams;
    for (Eigen::Index l = 0; l < grid.size(); ++l) {
      const GridCandidate& cand = grid.candidates[static_cast<std::size_t>(l)];
      auto [it, inserted] = grams.try_emplace(key_of(cand.kernel));
      if (inserted) {
        it->second.first = gram(cand.kernel, *train_inputs, *train_inputs);
        it->second.second = gram(cand.kernel, val_inputs, *train_inputs);
      }
      const DualEstimator est = fit_krr_with_gram(
          train_inputs, it->second.first, train_y, cand.kernel, cand.lambda);
      const Eigen::VectorXd pred = it->second.second * est.alpha;
      total[l] += (pred - val_y).squaredNorm() / denom;
    }
  }
  total /= static_cast<double>(folds.size());

  LocalSelection sel;
  sel.mean_errors = std::move(total);
  sel.index = pick_best(sel.mean_errors, grid);
  sel.candidate = grid.candidates[static_cast<std::size_t>(sel.index)];
  return sel;
}

TransformedParams log_transform(double lambda, std::optional<double> sigma,
                                Eigen::Index total_n, Eigen::Index shard_n) {
  if (shard_n < 2 || total_n < shard_n) {
    throw DomainError("log_transform: need 2 <= shard_n <= total_n");
  }
  if (!(lambda > 0.0) || !(lambda <= 1.0)) {
    throw DomainError("log_transform: lambda must lie in (0, 1]");
  }
  const double exponent = std::log(static_cast<double>(total_n)) /
                          std::log(static_cast<double>(shard_n));
  TransformedParams out;
  out.lambda = std::pow(lambda, exponent);
  if (out.lambda < std::numeric_limits<double>::min()) {
    out.lambda = 1e-10;  // pow underflowed; keep the solve well posed
  }
  if (sigma.has_value()) {
    if (!(*sigma > 0.0) || !std::isfinite(*sigma)) {
      throw DomainError("log_transform: sigma must be positive and finite");
    }
    out.sigma = std::pow(*sigma, exponent);
    if (!std::isfinite(out.sigma) ||
        out.sigma < std::numeric_limits<double>::min()) {
      throw NumericError("log_transform: transformed sigma left the "
                         "representable range");
    }
  }
  return out;
}

}  // namespace adkrr
