#include "bench_common.hpp"

#include <benchmark/benchmark.h>

using namespace quench;

static void BM_ReducedGradient(benchmark::State& state) {
    const ProblemSetup setup = bench::make_setup(64, static_cast<int>(state.range(0)));
    const BoundaryField u =
        BoundaryField::Constant(setup.steps + 1, setup.grid.num_boundary(), 0.05);
    for (auto _ : state) {
        benchmark::DoNotOptimize(reduced_gradient(setup, u, 1.0 / 32.0));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ReducedGradient)->Arg(20)->Arg(40);
