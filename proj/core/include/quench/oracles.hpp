#pragma once

#include "quench/control.hpp"

namespace quench {

struct FDGradientSpec {
    std::vector<double> steps{1e-3, 1e-4, 1e-5, 1e-6};
    std::uint64_t seed = 0x9e3779b97f4a7c15ull;
    int n_directions = 20;

    void validate() const;
};

struct FDGradientRow {
    int direction = 0;
    double step = 0.0;
    double fd_value = 0.0;
    double adjoint_value = 0.0;
    double rel_error = 0.0;
};

struct FDGradientReport {
    /// Worst over directions of the per-direction best-step relative error.
    double best_rel_error = 0.0;
    std::vector<double> per_direction_best;
    std::vector<FDGradientRow> table;
};

/// Central finite differences of the reduced cost along random
/// admissible-tangent directions versus the adjoint-based gradient.
FDGradientReport fd_gradient(const ProblemSetup& setup, const ControlField& u, double alpha,
                             const FDGradientSpec& spec = {},
                             const std::optional<BoundaryField>& anchor = std::nullopt);

struct ObstacleOptions {
    int inner_cap = 10000;    // projected Gauss-Seidel sweeps per solve
    int outer_cap = 1000;     // Picard updates of the chemical potential
    double outer_tol = 1e-9;
    double inner_tol = 1e-13; // sweep-to-sweep change
    double mass_tol = 1e-12;  // secant target on the mean
    int scalar_newton_iters = 8;
    int max_nodes = 257;      // oracle scale guard (1D)
};

struct ObstacleStepResult {
    StateSnapshot snapshot;
    Vector multiplier;     // pointwise selection xi, combined bulk/trace scaling
    int outer_iterations = 0;
    double complementarity_residual = 0.0; // max_i |xi_i| (1 - |y_i|)
    double mass_error = 0.0;
};

/// One implicit Euler step of the limiting obstacle problem, solved by
/// projected Gauss-Seidel on the phase equation with an outer mass-constrained
/// Picard update of the potential. Small 1D instances only.
ObstacleStepResult obstacle_step_oracle(const Grid& grid, const Potentials& pot,
                                        const StateSnapshot& prev, const Vector& u_slice,
                                        double dt, const ObstacleOptions& opts = {});

/// Chains oracle steps over the horizon.
std::vector<ObstacleStepResult> obstacle_trajectory(const Grid& grid, const Potentials& pot,
                                                    const Vector& y0, const BoundaryField& u,
                                                    double t_final, int steps,
                                                    const ObstacleOptions& opts = {});

struct QuenchObstacleRow {
    double alpha = 0.0;
    double l2_distance = 0.0; // ||y_alpha - y_obstacle||_{L2(Q)}
};

/// Distance between the barrier trajectories and the obstacle oracle
/// trajectory for a fixed control, per barrier parameter.
std::vector<QuenchObstacleRow> compare_quench_to_obstacle(const ProblemSetup& setup,
                                                          const BoundaryField& u,
                                                          const std::vector<double>& alphas,
                                                          const ObstacleOptions& opts = {});

} // namespace quench
