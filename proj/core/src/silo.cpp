#include "adkrr/silo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <map>
#include <memory>
#include <optional>
#include <thread>
#include <utility>

#include "adkrr/approx.hpp"
#include "adkrr/common.hpp"
#include "adkrr/kernels.hpp"

namespace adkrr {

Eigen::Index Partition::total() const {
  Eigen::Index n = 0;
  for (const auto& a : assignments) n += static_cast<Eigen::Index>(a.size());
  return n;
}

Partition partition_uniform(Eigen::Index n, Eigen::Index machines,
                            std::uint64_t seed) {
  if (machines < 1) throw DomainError("partition: need at least one machine");
  if (n < machines) throw DomainError("partition: fewer samples than machines");
  const auto perm = rng::shuffled_indices<Eigen::Index>(n, seed);
  const Eigen::Index base = n / machines;
  const Eigen::Index rem = n % machines;
  Partition p;
  p.assignments.resize(static_cast<std::size_t>(machines));
  Eigen::Index offset = 0;
  for (Eigen::Index j = 0; j < machines; ++j) {
    const Eigen::Index len = base + (j < rem ? 1 : 0);
    auto& block = p.assignments[static_cast<std::size_t>(j)];
    block.assign(perm.begin() + offset, perm.begin() + offset + len);
    std::sort(block.begin(), block.end());
    offset += len;
  }
  return p;
}

Partition partition_random_min(Eigen::Index n, Eigen::Index machines,
                               Eigen::Index min_per_machine,
                               std::uint64_t seed) {
  if (machines < 1) throw DomainError("partition: need at least one machine");
  if (min_per_machine < 1) {
    throw DomainError("partition: per-machine minimum must be at least 1");
  }
  if (n < machines * min_per_machine) {
    throw DomainError("partition: not enough samples for the per-machine "
                      "minimum");
  }
  const auto perm = rng::shuffled_indices<Eigen::Index>(n, seed);
  Partition p;
  p.assignments.resize(static_cast<std::size_t>(machines));
  Eigen::Index offset = 0;
  for (auto& block : p.assignments) {
    block.assign(perm.begin() + offset, perm.begin() + offset + min_per_machine);
    offset += min_per_machine;
  }
  std::mt19937_64 eng(rng::derive_seed(seed, 1));
  for (; offset < n; ++offset) {
    const auto j = static_cast<std::size_t>(
        rng::bounded(eng, static_cast<std::uint64_t>(machines)));
    p.assignments[j].push_back(perm[static_cast<std::size_t>(offset)]);
  }
  for (auto& block : p.assignments) std::sort(block.begin(), block.end());
  return p;
}

void CommLedger::add(std::string round, CommDirection direction,
                     std::string payload, std::uint64_t scalars) {
  total_scalars += scalars;
  records.push_back(
      {std::move(round), direction, std::move(payload), scalars});
}

std::uint64_t CommLedger::round_total(std::string_view round) const {
  std::uint64_t total = 0;
  for (const CommRecord& r : records) {
    if (r.round == round) total += r.scalars;
  }
  return total;
}

std::uint64_t CommLedger::payload_total(std::string_view round,
                                        std::string_view payload) const {
  std::uint64_t total = 0;
  for (const CommRecord& r : records) {
    if (r.round == round && r.payload == payload) total += r.scalars;
  }
  return total;
}

double test_mse(const Eigen::Ref<const Eigen::VectorXd>& pred,
                const Eigen::Ref<const Eigen::VectorXd>& truth) {
  if (pred.size() != truth.size() || pred.size() == 0) {
    throw ShapeError("test_mse: prediction/truth length mismatch");
  }
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

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

DataSet gather_shard(const DataSet& data,
                     const std::vector<Eigen::Index>& rows) {
  return {gather_rows(data.inputs, rows), gather(data.outputs, rows)};
}

void check_partition(const Partition& partition, Eigen::Index n) {
  if (partition.machines() < 1) {
    throw DomainError("partition: need at least one machine");
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (const auto& block : partition.assignments) {
    if (block.empty()) throw DomainError("partition: empty machine");
    for (Eigen::Index i : block) {
      if (i < 0 || i >= n) throw DomainError("partition: index out of range");
      if (seen[static_cast<std::size_t>(i)]) {
        throw DomainError("partition: index assigned twice");
      }
      seen[static_cast<std::size_t>(i)] = true;
    }
  }
  if (partition.total() != n) {
    throw DomainError("partition: assignments do not cover the data");
  }
}

std::vector<std::uint8_t> pack_predictions(const Eigen::VectorXd& values) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + 8 * static_cast<std::size_t>(values.size()));
  auto put = [&out](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      out.push_back(static_cast<std::uint8_t>((word >> (8 * i)) & 0xffu));
    }
  };
  put(static_cast<std::uint64_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::uint64_t bits;
    const double v = values[i];
    std::memcpy(&bits, &v, 8);
    put(bits);
  }
  return out;
}

Eigen::VectorXd unpack_predictions(const std::vector<std::uint8_t>& bytes) {
  auto get = [&bytes](std::size_t at) {
    std::uint64_t word = 0;
    for (int i = 0; i < 8; ++i) {
      word |= static_cast<std::uint64_t>(bytes[at + static_cast<std::size_t>(i)])
              << (8 * i);
    }
    return word;
  };
  if (bytes.size() < 8) throw ParseError("prediction payload: truncated");
  const std::uint64_t q = get(0);
  if (bytes.size() != 8 + 8 * q) {
    throw ParseError("prediction payload: size disagrees with header");
  }
  Eigen::VectorXd values(static_cast<Eigen::Index>(q));
  for (std::uint64_t i = 0; i < q; ++i) {
    const std::uint64_t bits = get(8 + 8 * static_cast<std::size_t>(i));
    double v;
    std::memcpy(&v, &bits, 8);
    values[static_cast<Eigen::Index>(i)] = v;
  }
  return values;
}

/// Run fn(j) for every machine index on a small worker pool. Exceptions are
/// collected and the lowest-index one is rethrown, tagged with its machine.
template <typename Fn>
void for_each_machine(Eigen::Index machines, int threads, Fn&& fn) {
  int workers = threads > 0
                    ? threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = static_cast<int>(
      std::min<Eigen::Index>(machines, static_cast<Eigen::Index>(workers)));

  std::vector<std::exception_ptr> failures(
      static_cast<std::size_t>(machines));
  auto body = [&](Eigen::Index j) {
    try {
      fn(j);
    } catch (const MachineError&) {
      failures[static_cast<std::size_t>(j)] = std::current_exception();
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(j)] = std::make_exception_ptr(
          MachineError(static_cast<int>(j), e.what()));
    }
  };

  if (workers == 1) {
    for (Eigen::Index j = 0; j < machines; ++j) body(j);
  } else {
    std::atomic<Eigen::Index> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (Eigen::Index j = next.fetch_add(1); j < machines;
             j = next.fetch_add(1)) {
          body(j);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
}

SplitPlan derived_plan(const SplitPlan& plan, Eigen::Index machine) {
  SplitPlan out = plan;
  out.seed = rng::derive_seed(plan.seed, static_cast<std::uint64_t>(machine));
  return out;
}

/// One simulated machine. The shard never leaves this object: everything the
/// orchestrator gets out of it is either serialized protocol bytes or size
/// metadata.
class LocalMachine {
 public:
  LocalMachine(Eigen::Index index, DataSet shard, const ParamGrid& grid,
               const SplitPlan& plan, std::shared_ptr<const CenterSet> centers,
               double mu, double bound)
      : index_(index),
        shard_(std::move(shard)),
        grid_(grid),
        centers_(std::move(centers)),
        mu_(mu),
        bound_(bound),
        folds_(split(shard_.size(), plan)),
        fold_errors_(grid.size(), static_cast<Eigen::Index>(folds_.size())) {}

  Eigen::Index shard_size() const { return shard_.size(); }
  std::size_t fold_count() const { return folds_.size(); }
  Eigen::Index train_size(std::size_t fold) const {
    return static_cast<Eigen::Index>(folds_[fold].train.size());
  }

  std::vector<std::uint8_t> coeff_payload(std::size_t fold,
                                          Eigen::Index total_train) {
    const IndexSplit& f = folds_[fold];
    auto train_inputs =
        std::make_shared<Eigen::MatrixXd>(gather_rows(shard_.inputs, f.train));
    const Eigen::VectorXd train_y = gather(shard_.outputs, f.train);

    CoeffMatrix out;
    out.coeffs.resize(centers_->points.rows(), grid_.size());
    struct KernelState {
      Eigen::MatrixXd kxx;
      std::unique_ptr<LocalApproxSolver> solver;
    };
    std::map<KernelKey, KernelState> cache;
    for (Eigen::Index l = 0; l < grid_.size(); ++l) {
      const GridCandidate& cand = grid_.candidates[static_cast<std::size_t>(l)];
      auto [it, inserted] = cache.try_emplace(key_of(cand.kernel));
      if (inserted) {
        it->second.kxx = gram(cand.kernel, *train_inputs, *train_inputs);
        it->second.solver = std::make_unique<LocalApproxSolver>(
            cand.kernel, *train_inputs, centers_, mu_);
      }
      const DualEstimator est = fit_krr_with_gram(
          train_inputs, it->second.kxx, train_y, cand.kernel, cand.lambda);
      // The projection samples the fitted estimator at its own training
      // points, so the fitted values come straight off the gram matrix.
      out.coeffs.col(l) = it->second.solver->solve(it->second.kxx * est.alpha);
    }
    out.weight_num = static_cast<std::int64_t>(f.train.size());
    out.weight_den = static_cast<std::int64_t>(total_train);
    return serialize(out);
  }

  void receive_global(std::size_t fold, const std::vector<std::uint8_t>& bytes) {
    const CoeffMatrix global =
        deserialize_coeff_matrix(bytes.data(), bytes.size());
    const IndexSplit& f = folds_[fold];
    const DataSet val{gather_rows(shard_.inputs, f.val),
                      gather(shard_.outputs, f.val)};
    const ValidationResult r =
        validate_global(global.coeffs, grid_, *centers_, val, bound_);
    fold_errors_.col(static_cast<Eigen::Index>(fold)) = r.errors;
  }

  MachineSelection select_candidate() {
    const Eigen::VectorXd mean = fold_errors_.rowwise().mean();
    const Eigen::Index best = pick_best(mean, grid_);
    chosen_ = grid_.candidates[static_cast<std::size_t>(best)];
    MachineSelection sel;
    sel.machine = index_;
    sel.grid_index = best;
    sel.lambda = chosen_->lambda;
    sel.kernel = chosen_->kernel;
    sel.validation_mse = mean[best];
    sel.applied_lambda = chosen_->lambda;
    sel.applied_kernel = chosen_->kernel;
    return sel;
  }

  std::vector<std::uint8_t> prediction_payload(
      const Eigen::Ref<const Eigen::MatrixXd>& queries) const {
    const DualEstimator est =
        fit_krr(shard_, chosen_->kernel, chosen_->lambda);
    return pack_predictions(truncate(predict(est, queries), bound_));
  }

 private:
  Eigen::Index index_;
  DataSet shard_;
  const ParamGrid& grid_;
  std::shared_ptr<const CenterSet> centers_;
  double mu_;
  double bound_;
  std::vector<IndexSplit> folds_;
  Eigen::MatrixXd fold_errors_;  // one column of candidate errors per fold
  std::optional<GridCandidate> chosen_;
};

GlobalPrediction average_predictions(
    const std::vector<std::vector<std::uint8_t>>& payloads,
    const Partition& partition, Eigen::Index queries) {
  const Eigen::Index m = partition.machines();
  const auto total = static_cast<double>(partition.total());
  GlobalPrediction out;
  out.values = Eigen::VectorXd::Zero(queries);
  out.per_machine_values.resize(m, queries);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::VectorXd pred =
        unpack_predictions(payloads[static_cast<std::size_t>(j)]);
    if (pred.size() != queries) {
      throw MachineError(static_cast<int>(j),
                         "prediction length disagrees with the query count");
    }
    const double weight =
        static_cast<double>(partition.assignments[static_cast<std::size_t>(j)]
                                .size()) /
        total;
    out.per_machine_values.row(j) = pred.transpose();
    out.values += weight * pred;  // machine order, deterministic
  }
  return out;
}

}  // namespace

DistributedRunResult run_adadkrr(
    const DataSet& train, const Eigen::Ref<const Eigen::MatrixXd>& test_inputs,
    const Partition& partition, const ParamGrid& grid, const SplitPlan& plan,
    const CenterConfig& centers, double mu, double bound, int threads) {
  check_partition(partition, train.size());
  if (grid.size() < 1) throw DomainError("run: empty candidate grid");
  if (test_inputs.cols() != train.dim()) {
    throw ShapeError("run: test input dimension mismatch");
  }
  if (!(bound > 0.0) || !std::isfinite(bound)) {
    throw DomainError("run: truncation bound must be positive and finite");
  }

  const Eigen::Index m = partition.machines();
  const Eigen::Index n_centers = center_count(centers.count, train.size(), m);
  const auto center_set = std::make_shared<const CenterSet>(generate_centers(
      centers.kind, n_centers, train.dim(), centers.seed));

  std::vector<std::unique_ptr<LocalMachine>> machines(
      static_cast<std::size_t>(m));
  for_each_machine(m, threads, [&](Eigen::Index j) {
    machines[static_cast<std::size_t>(j)] = std::make_unique<LocalMachine>(
        j, gather_shard(train, partition.assignments[static_cast<std::size_t>(j)]),
        grid, derived_plan(plan, j), center_set, mu, bound);
  });

  DistributedRunResult result;
  const auto coeff_scalars = static_cast<std::uint64_t>(n_centers) *
                             static_cast<std::uint64_t>(grid.size());
  const std::size_t folds = machines.front()->fold_count();
  for (std::size_t f = 0; f < folds; ++f) {
    Eigen::Index fold_train_total = 0;
    for (const auto& machine : machines) {
      fold_train_total += machine->train_size(f);
    }

    std::vector<std::vector<std::uint8_t>> up(static_cast<std::size_t>(m));
    for_each_machine(m, threads, [&](Eigen::Index j) {
      up[static_cast<std::size_t>(j)] =
          machines[static_cast<std::size_t>(j)]->coeff_payload(
              f, fold_train_total);
    });
    std::vector<CoeffMatrix> locals;
    locals.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& bytes = up[static_cast<std::size_t>(j)];
      locals.push_back(deserialize_coeff_matrix(bytes.data(), bytes.size()));
      result.ledger.add("I", CommDirection::ToOrchestrator, "coefficients",
                        coeff_scalars);
      result.ledger.add("I", CommDirection::ToOrchestrator, "weights", 1);
    }

    CoeffMatrix broadcast;
    broadcast.coeffs = synthesize(locals);
    broadcast.weight_num = 1;
    broadcast.weight_den = 1;
    const std::vector<std::uint8_t> down = serialize(broadcast);
    for_each_machine(m, threads, [&](Eigen::Index j) {
      machines[static_cast<std::size_t>(j)]->receive_global(f, down);
    });
    for (Eigen::Index j = 0; j < m; ++j) {
      result.ledger.add("II", CommDirection::ToMachines, "coefficients",
                        coeff_scalars);
    }
  }

  result.selections.resize(static_cast<std::size_t>(m));
  std::vector<std::vector<std::uint8_t>> preds(static_cast<std::size_t>(m));
  for_each_machine(m, threads, [&](Eigen::Index j) {
    auto& machine = *machines[static_cast<std::size_t>(j)];
    result.selections[static_cast<std::size_t>(j)] =
        machine.select_candidate();
    preds[static_cast<std::size_t>(j)] =
        machine.prediction_payload(test_inputs);
  });
  for (Eigen::Index j = 0; j < m; ++j) {
    result.ledger.add("III", CommDirection::ToOrchestrator, "predictions",
                      static_cast<std::uint64_t>(test_inputs.rows()));
  }
  result.prediction =
      average_predictions(preds, partition, test_inputs.rows());
  return result;
}

DistributedRunResult run_baseline(
    BaselineStrategy strategy, const DataSet& train,
    const Eigen::Ref<const Eigen::MatrixXd>& test_inputs,
    const Partition& partition, const ParamGrid& grid, const SplitPlan& plan,
    double bound, int threads) {
  check_partition(partition, train.size());
  if (grid.size() < 1) throw DomainError("run: empty candidate grid");
  if (test_inputs.cols() != train.dim()) {
    throw ShapeError("run: test input dimension mismatch");
  }
  if (!(bound > 0.0) || !std::isfinite(bound)) {
    throw DomainError("run: truncation bound must be positive and finite");
  }

  const Eigen::Index m = partition.machines();
  DistributedRunResult result;
  result.selections.resize(static_cast<std::size_t>(m));
  std::vector<std::vector<std::uint8_t>> preds(static_cast<std::size_t>(m));
  for_each_machine(m, threads, [&](Eigen::Index j) {
    const DataSet shard =
        gather_shard(train, partition.assignments[static_cast<std::size_t>(j)]);
    const LocalSelection local =
        local_cv_select(shard, grid, derived_plan(plan, j));

    MachineSelection sel;
    sel.machine = j;
    sel.grid_index = local.index;
    sel.lambda = local.candidate.lambda;
    sel.kernel = local.candidate.kernel;
    sel.validation_mse = local.mean_errors[local.index];
    sel.applied_lambda = local.candidate.lambda;
    sel.applied_kernel = local.candidate.kernel;
    if (strategy == BaselineStrategy::DkrrLog) {
      const bool gaussian =
          local.candidate.kernel.family == KernelFamily::Gaussian;
      const TransformedParams t = log_transform(
          local.candidate.lambda,
          gaussian ? std::optional<double>(local.candidate.kernel.sigma)
                   : std::nullopt,
          train.size(), shard.size());
      sel.applied_lambda = t.lambda;
      if (gaussian) sel.applied_kernel.sigma = t.sigma;
    }
    result.selections[static_cast<std::size_t>(j)] = sel;

    const DualEstimator est =
        fit_krr(shard, sel.applied_kernel, sel.applied_lambda);
    preds[static_cast<std::size_t>(j)] =
        pack_predictions(predict(est, test_inputs));
  });
  for (Eigen::Index j = 0; j < m; ++j) {
    result.ledger.add("III", CommDirection::ToOrchestrator, "predictions",
                      static_cast<std::uint64_t>(test_inputs.rows()));
  }
  result.prediction =
      average_predictions(preds, partition, test_inputs.rows());
  return result;
}

GlobalPrediction run_dkrr_fixed(
    const DataSet& train, const Eigen::Ref<const Eigen::MatrixXd>& test_inputs,
    const Partition& partition, const KernelSpec& kernel, double lambda,
    int threads) {
  check_partition(partition, train.size());
  if (test_inputs.cols() != train.dim()) {
    throw ShapeError("run: test input dimension mismatch");
  }
  const Eigen::Index m = partition.machines();
  std::vector<std::vector<std::uint8_t>> preds(static_cast<std::size_t>(m));
  for_each_machine(m, threads, [&](Eigen::Index j) {
    const DataSet shard =
        gather_shard(train, partition.assignments[static_cast<std::size_t>(j)]);
    const DualEstimator est = fit_krr(shard, kernel, lambda);
    preds[static_cast<std::size_t>(j)] =
        pack_predictions(predict(est, test_inputs));
  });
  return average_predictions(preds, partition, test_inputs.rows());
}

}  // namespace adkrr
