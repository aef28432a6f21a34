#include "bench_common.hpp"

#include <benchmark/benchmark.h>

using namespace quench;

static void BM_ImplicitStep(benchmark::State& state) {
    const ProblemSetup setup = bench::make_setup(static_cast<int>(state.range(0)), 1);
    const double alpha = 1.0 / 32.0;
    StateSnapshot prev;
    prev.y = FieldPair::from_bulk(setup.grid, setup.y0);
    prev.w = Vector::Zero(setup.grid.num_nodes);
    const Vector u = Vector::Constant(setup.grid.num_boundary(), 0.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(step_state(setup.grid, setup.pot, prev, u, alpha, 0.005));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ImplicitStep)->Arg(64)->Arg(256)->Arg(1024);

static void BM_StateSolveHorizon(benchmark::State& state) {
    const ProblemSetup setup = bench::make_setup(64, static_cast<int>(state.range(0)));
    const BoundaryField u = BoundaryField::Zero(setup.steps + 1, setup.grid.num_boundary());
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_state(setup.grid, setup.pot, setup.y0, u, 1.0 / 32.0,
                                             setup.t_final, setup.steps));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StateSolveHorizon)->Arg(20)->Arg(80);
