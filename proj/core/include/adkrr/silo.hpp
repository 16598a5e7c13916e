#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adkrr/krr.hpp"
#include "adkrr/qmc.hpp"
#include "adkrr/select.hpp"

namespace adkrr {

/// Disjoint assignment of global sample indices to machines. Index lists are
/// kept sorted, so a single-machine partition is the identity layout.
struct Partition {
  std::vector<std::vector<Eigen::Index>> assignments;

  Eigen::Index machines() const {
    return static_cast<Eigen::Index>(assignments.size());
  }
  Eigen::Index total() const;
};

/// Seeded random permutation cut into blocks of size floor(N/m) or +1; the
/// first N mod m machines take the extra sample.
Partition partition_uniform(Eigen::Index n, Eigen::Index machines,
                            std::uint64_t seed);

/// Every machine gets min_per_machine samples first; each remaining sample
/// goes to a machine drawn uniformly at random, so sizes vary.
Partition partition_random_min(Eigen::Index n, Eigen::Index machines,
                               Eigen::Index min_per_machine,
                               std::uint64_t seed);

enum class CommDirection { ToOrchestrator, ToMachines };

struct CommRecord {
  std::string round;    // "I", "II" or "III"
  CommDirection direction = CommDirection::ToOrchestrator;
  std::string payload;  // "coefficients", "weights" or "predictions"
  std::uint64_t scalars = 0;
};

/// Exact count of every scalar that crossed the silo boundary, recorded as
/// the transfers happen.
struct CommLedger {
  std::vector<CommRecord> records;
  std::uint64_t total_scalars = 0;

  void add(std::string round, CommDirection direction, std::string payload,
           std::uint64_t scalars);
  std::uint64_t round_total(std::string_view round) const;
  std::uint64_t payload_total(std::string_view round,
                              std::string_view payload) const;
};

/// Final averaged prediction plus the per-machine vectors it was averaged
/// from (row j belongs to machine j).
struct GlobalPrediction {
  Eigen::VectorXd values;
  Eigen::MatrixXd per_machine_values;
};

/// What one machine chose and, after any transform, actually refit with.
struct MachineSelection {
  Eigen::Index machine = 0;
  Eigen::Index grid_index = 0;
  double lambda = 0.0;        // selected off the grid
  KernelSpec kernel;          // selected off the grid
  double validation_mse = 0.0;
  double applied_lambda = 0.0;  // equals lambda unless a transform ran
  KernelSpec applied_kernel;
};

struct DistributedRunResult {
  GlobalPrediction prediction;
  std::vector<MachineSelection> selections;
  CommLedger ledger;
};

/// Which shared basis the machines expand in.
struct CenterConfig {
  CenterKind kind = CenterKind::Sobol;
  CenterCountPolicy count = CenterCountPolicy::per_machine_average();
  std::optional<std::uint64_t> seed;  // Random centers only
};

/// The adaptive protocol end to end. Per machine: split the shard, fit one
/// ridge regressor per grid candidate on the training part, project each
/// onto the shared basis, send the coefficient matrix up; the orchestrator
/// synthesizes the weighted global matrix and broadcasts it back; machines
/// validate the truncated global expansion on their held-out part, pick
/// their own candidate, refit on the full shard and send truncated test
/// predictions up, which are averaged by shard size. With a k-fold plan the
/// coefficient rounds repeat per fold and validation errors are averaged
/// before the argmin. Machine sub-seeds derive from plan.seed and the
/// machine index, so results do not depend on execution order. threads = 0
/// means one worker per hardware thread.
DistributedRunResult run_adadkrr(
    const DataSet& train, const Eigen::Ref<const Eigen::MatrixXd>& test_inputs,
    const Partition& partition, const ParamGrid& grid, const SplitPlan& plan,
    const CenterConfig& centers, double mu, double bound, int threads = 0);

enum class BaselineStrategy { Dkrr, DkrrLog };

/// Communication-free selection: every machine cross-validates on its own
/// shard, refits on the full shard and sends plain (untruncated) test
/// predictions; DkrrLog additionally raises the selected lambda, and the
/// Gaussian width, to the power ln(N)/ln(shard size) before the refit. The
/// bound is accepted for parity with the adaptive entry point but the plain
/// weighted average is deliberately left untruncated.
DistributedRunResult run_baseline(
    BaselineStrategy strategy, const DataSet& train,
    const Eigen::Ref<const Eigen::MatrixXd>& test_inputs,
    const Partition& partition, const ParamGrid& grid, const SplitPlan& plan,
    double bound, int threads = 0);

/// No selection at all: every machine fits the given candidate on its full
/// shard; predictions are weighted-averaged untruncated.
GlobalPrediction run_dkrr_fixed(
    const DataSet& train, const Eigen::Ref<const Eigen::MatrixXd>& test_inputs,
    const Partition& partition, const KernelSpec& kernel, double lambda,
    int threads = 0);

double test_mse(const Eigen::Ref<const Eigen::VectorXd>& pred,
                const Eigen::Ref<const Eigen::VectorXd>& truth);

}  // namespace adkrr
