#include "bench_common.hpp"

#include "quench/elliptic.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace quench;

static void BM_NeumannInverse(benchmark::State& state) {
    const Grid grid = build_grid(static_cast<int>(state.range(0)), 1.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vector v(grid.num_nodes);
    for (int i = 0; i < grid.num_nodes; ++i) v(i) = unit(rng);
    v.array() -= grid.mean_value(v);
    for (auto _ : state) {
        benchmark::DoNotOptimize(neumann_inverse(grid, v));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_NeumannInverse)->Arg(64)->Arg(256)->Arg(1024);

static void BM_DualNorm(benchmark::State& state) {
    const Grid grid = build_grid(static_cast<int>(state.range(0)), 1.0);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vector v(grid.num_nodes);
    for (int i = 0; i < grid.num_nodes; ++i) v(i) = unit(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dual_norm(grid, v));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DualNorm)->Arg(64)->Arg(256);
