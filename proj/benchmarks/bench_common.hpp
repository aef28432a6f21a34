#pragma once

#include "quench/control.hpp"

#include <cmath>

namespace quench::bench {

inline ProblemSetup make_setup(int cells, int steps = 20) {
    ProblemSetup setup;
    setup.grid = build_grid(cells, 1.0);
    setup.pot = Potentials{};
    setup.y0 = Vector(setup.grid.num_nodes);
    for (int i = 0; i < setup.grid.num_nodes; ++i)
        setup.y0(i) = 0.5 * std::cos(M_PI * setup.grid.coords(i, 0));
    setup.t_final = 0.1;
    setup.steps = steps;
    setup.weights = CostWeights{1.0, 1.0, 0.0, 0.0, 0.01};
    setup.targets = Targets::constant(setup.grid, steps, 0.2, 0.2);
    return setup;
}

} // namespace quench::bench
