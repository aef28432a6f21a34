#pragma once

#include "quench/elliptic.hpp"
#include "quench/geometry.hpp"
#include "quench/potentials.hpp"

#include <optional>
#include <vector>

namespace quench {

/// State of the phase system at one time node: order parameter with trace,
/// chemical potential, and per-step solver diagnostics.
struct StateSnapshot {
    FieldPair y;
    Vector w;
    double t = 0.0;
    int newton_iterations = 0;
    double newton_residual = 0.0;
    double bound_margin = 1.0; // 1 - max(|y|, |y_Gamma|), strictly positive
};

/// Boundedness monitors recorded per run (discrete time-derivative, gradient
/// and second-derivative norms for bulk and trace).
struct StateMonitors {
    double dt_l2_bulk = 0.0;      // ||d_t y||_{L2(0,T;H)}
    double dt_l2_boundary = 0.0;  // ||d_t y_Gamma||_{L2(0,T;H_Gamma)}
    double sup_h1_bulk = 0.0;     // sup_t ||y||_{H1}
    double sup_h1_boundary = 0.0;
    double l2_h2_bulk = 0.0;      // ||Lap y||_{L2(0,T;H)}
    double l2_h2_boundary = 0.0;
    double max_mass_drift = 0.0;  // max_k |mean(y_k) - m0|
    double min_bound_margin = 1.0;
};

struct StateTrajectory {
    std::vector<StateSnapshot> snapshots; // K+1, snapshots[0] is the initial state
    double dt = 0.0;
    double alpha = 0.0;
    double m0 = 0.0; // conserved mean of the initial data
    StateMonitors monitors;

    int steps() const { return static_cast<int>(snapshots.size()) - 1; }
};

struct StepControls {
    double newton_tol = 1e-10;
    int newton_max_iter = 50;
    int retry_cap = 5;          // substep-predictor retries on Newton failure
    double ftb_factor = 0.01;   // fraction-to-boundary: |y| <= 1 - ftb*(1 - max|y_prev|)
};

/// One fully implicit step of the barrier-regularized system: all nonlinear
/// terms at the new time level, damped Newton with an interior-point
/// fraction-to-boundary safeguard. `u_slice` is the boundary control at the
/// new time. Throws SolveError with the residual history on non-convergence.
StateSnapshot step_state(const Grid& grid, const Potentials& pot, const StateSnapshot& prev,
                         const Vector& u_slice, double alpha, double dt,
                         const StepControls& controls = {});

/// Advances the full horizon. `u` holds one row per time node; step k uses row
/// k (the new-time slice). Initial data must be strictly inside (-1,1).
StateTrajectory solve_state(const Grid& grid, const Potentials& pot, const Vector& y0,
                            const BoundaryField& u, double alpha, double t_final, int steps,
                            const StepControls& controls = {});

/// A posteriori residual norms of both weak-form equations per step; empty for
/// a trajectory holding only the initial snapshot.
std::vector<double> state_residual(const Grid& grid, const Potentials& pot,
                                   const StateTrajectory& traj, const BoundaryField& u,
                                   double alpha);

/// Discrete free energy of one snapshot (bulk + surface including the control
/// work term). Raises std::domain_error if the state touches the obstacle.
double energy(const Grid& grid, const Potentials& pot, const StateSnapshot& snap,
              const Vector& u_slice, double alpha);

namespace detail {

/// Residual and Jacobian blocks of the stacked implicit step; shared by the
/// Newton solver, the a posteriori residual, and the exact-transpose adjoint.
struct StepSystem {
    const Grid& grid;
    const Potentials& pot;
    double alpha;
    double dt;
    double phi;
    double psi;

    StepSystem(const Grid& g, const Potentials& p, double a, double step);

    /// Stacked residual [F1; F2] at (y, w) given the previous state and the
    /// new-time control slice.
    Vector residual(const Vector& y, const Vector& w, const Vector& y_prev,
                    const Vector& u_slice) const;

    /// Jacobian of the residual with respect to (y, w) at the state y.
    SparseMatrix jacobian(const Vector& y) const;

    /// Transpose of jacobian(y) (blockwise: every block is symmetric).
    SparseMatrix jacobian_transpose(const Vector& y) const;

    /// C = M/dt + A + A_Gamma-lift + W diag(phi h'' + f2'') + lift(W_Gamma
    /// diag(psi h'' + g2'')): the y-block of the linearized second equation.
    SparseMatrix coupling_matrix(const Vector& y) const;

    Vector mass_apply(const Vector& y) const; // (W + T' W_Gamma T) y
};

} // namespace detail

} // namespace quench
