#pragma once

#include "quench/control.hpp"

#include <random>

namespace quench::testing {

inline Vector random_field(int n, std::uint64_t seed, double amplitude = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-amplitude, amplitude);
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = unit(rng);
    return v;
}

inline Vector random_zero_mean(const Grid& grid, std::uint64_t seed, double amplitude = 1.0) {
    Vector v = random_field(grid.num_nodes, seed, amplitude);
    v.array() -= grid.mean_value(v);
    return v;
}

inline Vector eval_on_grid(const Grid& grid, double (*f)(double)) {
    Vector v(grid.num_nodes);
    for (int i = 0; i < grid.num_nodes; ++i) v(i) = f(grid.coords(i, 0));
    return v;
}

/// Reference problem: 1D, 65 nodes, T = 0.1, 20 steps, default potentials,
/// beta = (1, 1, 0, 0, 0.01), targets 0.2, y0 = 0.5 cos(pi x).
inline ProblemSetup reference_setup(int cells = 64, int steps = 20, double t_final = 0.1) {
    ProblemSetup setup;
    setup.grid = build_grid(cells, 1.0);
    setup.pot = Potentials{};
    setup.y0 = Vector(setup.grid.num_nodes);
    for (int i = 0; i < setup.grid.num_nodes; ++i)
        setup.y0(i) = 0.5 * std::cos(M_PI * setup.grid.coords(i, 0));
    setup.t_final = t_final;
    setup.steps = steps;
    setup.weights = CostWeights{1.0, 1.0, 0.0, 0.0, 0.01};
    setup.targets = Targets::constant(setup.grid, steps, 0.2, 0.2);
    return setup;
}

inline ControlField reference_control(const ProblemSetup& setup, double value = 0.0,
                                      double lo = -1.0, double hi = 1.0, double m0 = 10.0) {
    return ControlField::constant_bounds(setup.grid, setup.steps, value, lo, hi, m0);
}

} // namespace quench::testing
