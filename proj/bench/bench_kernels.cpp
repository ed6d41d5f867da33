#include <benchmark/benchmark.h>

#include <random>

#include "sandpile/benchmarks.hpp"
#include "sandpile/kernels.hpp"
#include "sandpile/linalg.hpp"
#include "sandpile/state_solver.hpp"

using namespace sandpile;

namespace {

std::vector<double> random_values(std::size_t n, double scale, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = N(rng);
  return v;
}

// Args: dim, n, threads (0 = serial reference).
void apply_args(benchmark::internal::Benchmark* b) {
  for (int dim : {1, 2}) {
    const std::vector<int> sizes = dim == 1 ? std::vector<int>{1023, 65535, 1048575}
                                            : std::vector<int>{63, 255, 1023};
    for (int n : sizes) {
      for (int t : {0, 1, 4}) b->Args({dim, n, t});
    }
  }
}

struct Setup {
  Grid g;
  std::vector<double> nodal, cells, out_cells, out_nodes, phi;
  explicit Setup(const benchmark::State& s)
      : g(static_cast<int>(s.range(0)), static_cast<int>(s.range(1))),
        nodal(random_values(g.node_count(), 0.05, 1)),
        cells(random_values(g.cell_count() * static_cast<std::size_t>(g.dim()), 1.0, 2)),
        out_cells(cells.size()),
        out_nodes(g.node_count()),
        phi(g.cell_count(), 1.0) {
    if (s.range(2) > 0) set_num_threads(static_cast<int>(s.range(2)));
  }
  bool serial(const benchmark::State& s) const { return s.range(2) == 0; }
};

void BM_Gradient(benchmark::State& state) {
  Setup s(state);
  for (auto _ : state) {
    if (s.serial(state)) reference::gradient(s.g, s.nodal, s.out_cells);
    else kernels::gradient(s.g, s.nodal, s.out_cells);
    benchmark::DoNotOptimize(s.out_cells.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.g.cell_count()));
}

void BM_GradientAdjoint(benchmark::State& state) {
  Setup s(state);
  for (auto _ : state) {
    if (s.serial(state)) reference::gradient_adjoint(s.g, s.cells, s.out_nodes);
    else kernels::gradient_adjoint(s.g, s.cells, s.out_nodes);
    benchmark::DoNotOptimize(s.out_nodes.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.g.cell_count()));
}

void BM_IncrementalGradient(benchmark::State& state) {
  Setup s(state);
  for (auto _ : state) {
    if (s.serial(state)) reference::incremental_gradient(s.g, 2, s.nodal, s.out_cells);
    else kernels::incremental_gradient(s.g, 2, s.nodal, s.out_cells);
    benchmark::DoNotOptimize(s.out_cells.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.g.cell_count()));
}

void BM_IncrementalAdjoint(benchmark::State& state) {
  Setup s(state);
  for (auto _ : state) {
    if (s.serial(state)) reference::incremental_gradient_adjoint(s.g, 2, s.cells, s.out_nodes);
    else kernels::incremental_gradient_adjoint(s.g, 2, s.cells, s.out_nodes);
    benchmark::DoNotOptimize(s.out_nodes.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.g.cell_count()));
}

void BM_PenaltyFlux(benchmark::State& state) {
  Setup s(state);
  for (auto _ : state) {
    if (s.serial(state)) reference::penalty_flux(s.g, s.cells, s.phi, s.out_cells);
    else kernels::penalty_flux(s.g, s.cells, s.phi, s.out_cells);
    benchmark::DoNotOptimize(s.out_cells.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.g.cell_count()));
}

void BM_PenaltyTensors(benchmark::State& state) {
  Setup s(state);
  std::vector<double> tensors(s.g.cell_count() * static_cast<std::size_t>(s.g.dim() * s.g.dim()));
  for (auto _ : state) {
    if (s.serial(state)) reference::penalty_tensors(s.g, s.cells, s.phi, tensors);
    else kernels::penalty_tensors(s.g, s.cells, s.phi, tensors);
    benchmark::DoNotOptimize(tensors.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.g.cell_count()));
}

// Full continuation on the standard 2D benchmark; arg is the thread count.
void BM_PathFollow2D(benchmark::State& state) {
  set_num_threads(static_cast<int>(state.range(0)));
  const Benchmark b = standard_benchmark(2);
  for (auto _ : state) {
    const PathSolution p = path_follow(b.f, b.phi, b.config.solver, b.config.schedule.value_or(Schedule::standard()));
    benchmark::DoNotOptimize(p.u.values().data());
  }
}

}  // namespace

BENCHMARK(BM_Gradient)->Apply(apply_args)->UseRealTime();
BENCHMARK(BM_GradientAdjoint)->Apply(apply_args)->UseRealTime();
BENCHMARK(BM_IncrementalGradient)->Apply(apply_args)->UseRealTime();
BENCHMARK(BM_IncrementalAdjoint)->Apply(apply_args)->UseRealTime();
BENCHMARK(BM_PenaltyFlux)->Apply(apply_args)->UseRealTime();
BENCHMARK(BM_PenaltyTensors)->Apply(apply_args)->UseRealTime();
BENCHMARK(BM_PathFollow2D)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
