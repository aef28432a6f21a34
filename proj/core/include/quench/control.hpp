#pragma once

#include "quench/adjoint.hpp"

#include <cstdint>
#include <optional>

namespace quench {

/// Everything that defines one tracking problem instance: discretization,
/// potentials, initial data, horizon, and cost data. Owned by value so solver
/// entry points stay reentrant.
struct ProblemSetup {
    Grid grid;
    Potentials pot;
    Vector y0;
    double t_final = 0.0;
    int steps = 0;
    CostWeights weights;
    Targets targets;
    StepControls controls;

    double dt() const { return t_final / steps; }
    void validate() const;
};

/// Boundary control on Sigma = Gamma x time grid with pointwise box bounds and
/// a reported (not hard-enforced) budget on the L2 norm of the time
/// derivative.
struct ControlField {
    BoundaryField values;
    BoundaryField lower;
    BoundaryField upper;
    double m0_budget = 0.0;

    static ControlField constant_bounds(const Grid& grid, int steps, double value, double lo,
                                        double hi, double m0);
    void check_shapes(const Grid& grid, int steps) const;
    bool inside_bounds(double tol = 0.0) const;
};

/// Pointwise clamp onto [lower, upper]; idempotent and l2 non-expansive. The
/// derivative budget is intentionally not enforced here (box-only projection;
/// the budget is a diagnostic / optional penalty).
BoundaryField project_admissible(const BoundaryField& u, const BoundaryField& lower,
                                 const BoundaryField& upper);

/// ||d_t u||_{L2(Sigma)} by forward differences of the piecewise-linear in
/// time control.
double derivative_budget_norm(const Grid& grid, double dt, const BoundaryField& u);

/// Tracking cost: beta1/2 ||y - z_Q||^2_Q + beta2/2 ||y_G - z_S||^2_Sigma +
/// beta5/2 ||u||^2_Sigma with trapezoidal time quadrature.
double compute_cost(const Grid& grid, const StateTrajectory& traj, const BoundaryField& u,
                    const CostWeights& weights, const Targets& targets);

/// Adds the anchor penalty 1/2 ||u - anchor||^2_Sigma.
double compute_adapted_cost(const Grid& grid, const StateTrajectory& traj, const BoundaryField& u,
                            const CostWeights& weights, const Targets& targets,
                            const BoundaryField& anchor);

struct ReducedGradientResult {
    BoundaryField gradient; // beta5 u + dual trace (+ u - anchor in adapted mode)
    StateTrajectory trajectory;
    AdjointTrajectory adjoint;
    double cost = 0.0;         // plain tracking cost
    double adapted_cost = 0.0; // equals cost when no anchor is given
};

/// Solves state and adjoint and assembles the L2(Sigma) gradient of the
/// reduced (optionally adapted) cost.
ReducedGradientResult reduced_gradient(const ProblemSetup& setup, const BoundaryField& u,
                                       double alpha,
                                       const std::optional<BoundaryField>& anchor = std::nullopt);

struct OptOptions {
    double tol = 1e-7; // gradient-map norm target (reference step 1)
    int max_iter = 2000;
    double armijo = 1e-4;
    double backtrack = 0.5;
    double initial_step = 1.0;
    double step_min = 1e-6; // Barzilai-Borwein safeguard
    double step_max = 1e3;
    int max_backtracks = 60;
    double sigma_penalty = 0.0; // quadratic penalty on exceeding the budget
};

struct OptResult {
    ControlField control;
    std::vector<double> cost_history; // objective actually minimized
    std::vector<double> gradient_map_history;
    std::vector<double> step_history;
    double cost = 0.0;         // plain tracking cost at the final iterate
    double adapted_cost = 0.0; // with anchor penalty when applicable
    double vi_residual = 0.0;  // exact box minimum of <g, v - u>
    double fixed_point_gap = 0.0;
    double budget_norm = 0.0; // achieved ||d_t u||
    bool budget_active = false;
    bool converged = false;
    int iterations = 0;
    BoundaryField gradient; // total gradient at the final iterate
};

/// Projected gradient descent with Barzilai-Borwein step initialization and
/// Armijo backtracking on the reduced cost. Monotone cost history; stops when
/// || u - P(u - g) ||_{L2(Sigma)} <= tol.
OptResult projected_gradient_descent(const ProblemSetup& setup, const ControlField& u0,
                                     double alpha,
                                     const std::optional<BoundaryField>& anchor = std::nullopt,
                                     const OptOptions& opts = {});

/// Minimum of <g, v - u> over admissible v: the exact box minimizer plus
/// `n_samples` random box-valued fields and the bound fields themselves.
/// Nonnegative (up to tolerance) certifies the variational inequality.
double vi_residual(const Grid& grid, double dt, const BoundaryField& u_star,
                   const BoundaryField& g_star, const BoundaryField& lower,
                   const BoundaryField& upper, int n_samples, std::uint64_t seed);

/// || u - clamp(-q_Gamma / beta5) ||_{L2(Sigma)}; requires beta5 > 0.
double check_projection_fixed_point(const Grid& grid, double dt, const BoundaryField& u_star,
                                    const BoundaryField& q_gamma_star, double beta5,
                                    const BoundaryField& lower, const BoundaryField& upper);

} // namespace quench
