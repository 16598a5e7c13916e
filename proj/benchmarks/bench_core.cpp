#include <benchmark/benchmark.h>

#include <memory>

#include "adkrr/data.hpp"
#include "adkrr/silo.hpp"

using namespace adkrr;

namespace {

void bench_gram(benchmark::State& state) {
  const DataSet data =
      gen_synthetic(TargetKind::G1, state.range(0), 3, 0.1, 1).data;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        gram(KernelSpec::wendland(), data.inputs, data.inputs));
  }
}
BENCHMARK(bench_gram)->Arg(128)->Arg(512);

void bench_krr_fit(benchmark::State& state) {
  const DataSet data =
      gen_synthetic(TargetKind::G1, state.range(0), 3, 0.1, 2).data;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_krr(data, KernelSpec::wendland(), 1e-3));
  }
}
BENCHMARK(bench_krr_fit)->Arg(128)->Arg(512);

void bench_sobol(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        generate_centers(CenterKind::Sobol, state.range(0), 10));
  }
}
BENCHMARK(bench_sobol)->Arg(1024)->Arg(8192);

void bench_projection(benchmark::State& state) {
  const Eigen::Index s = state.range(0);
  const DataSet data = gen_synthetic(TargetKind::G1, s, 3, 0.1, 3).data;
  const auto centers = std::make_shared<CenterSet>(
      generate_centers(CenterKind::Sobol, s / 2, 3));
  const LocalApproxSolver solver(KernelSpec::wendland(), data.inputs, centers,
                                 1e-4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver.solve(data.outputs));
  }
}
BENCHMARK(bench_projection)->Arg(200)->Arg(400);

void bench_adaptive_run(benchmark::State& state) {
  const Eigen::Index m = state.range(0);
  const DataSet train = gen_synthetic(TargetKind::G1, 400, 3, 0.2, 4).data;
  const Eigen::MatrixXd queries =
      gen_synthetic(TargetKind::G1, 100, 3, 0.0, 5).data.inputs;
  const Partition part = partition_uniform(train.size(), m, 6);
  const ParamGrid grid = preset_grid("wendland-d3");
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_adadkrr(train, queries, part, grid,
                                         SplitPlan::hold_out(0.5, 7),
                                         CenterConfig{}, 1e-4, 3.0));
  }
}
BENCHMARK(bench_adaptive_run)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
