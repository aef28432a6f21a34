#pragma once

#include "quench/cost.hpp"
#include "quench/state.hpp"

namespace quench {

/// Dual state at one time node: (q, q_Gamma) with the reconstructed p.
struct AdjointSnapshot {
    FieldPair q;
    Vector p;
    double t = 0.0;
};

/// Exact discrete adjoint of the implicit state stepping, stored forward in
/// time. The terminal snapshot is identically zero; the snapshot at node j < K
/// carries the multiplier of the step arriving at node j+1 (the step's
/// departure node), which is what makes the terminal condition exact while the
/// control pairing stays exact through dual_trace().
struct AdjointTrajectory {
    std::vector<AdjointSnapshot> snapshots; // K+1
    double dt = 0.0;
    double alpha = 0.0;
    CostWeights weights;

    // Monitors: sup-in-time H-norm and l2-in-time V-norm of (q, q_Gamma).
    double sup_h_norm = 0.0;
    double l2_v_norm = 0.0;

    int steps() const { return static_cast<int>(snapshots.size()) - 1; }

    /// Trace of the multiplier paired with the control at time node k: the
    /// reduced gradient is beta5 u(k) + dual_trace(k). Zero at k = 0 (the
    /// initial control value never enters the dynamics).
    Vector dual_trace(int k) const;
};

/// Solves the adjoint system backward in time as the transpose of the
/// Newton-converged linearized forward steps, so that the pairing of
/// dual_trace with any control perturbation reproduces the derivative of the
/// discrete cost exactly (up to linear-solver tolerance).
AdjointTrajectory solve_adjoint(const Grid& grid, const Potentials& pot,
                                const StateTrajectory& traj, const Targets& targets,
                                const CostWeights& weights, double alpha);

/// Recomputes p from q through the inverse Neumann operator plus the discrete
/// mean-value recursion; independent of the multiplier route and equal to the
/// stored p up to solver tolerance.
std::vector<Vector> reconstruct_p(const Grid& grid, const Potentials& pot,
                                  const AdjointTrajectory& adjoint, const StateTrajectory& traj,
                                  const Targets& targets, const CostWeights& weights,
                                  double alpha);

/// Residual of the continuous-form adjoint equations under the same backward
/// time discretization, tested against the zero-mean pair space. O(dt + h^2)
/// consistency diagnostic, not a solver tolerance check.
std::vector<double> adjoint_residual_continuous(const Grid& grid, const Potentials& pot,
                                                const AdjointTrajectory& adjoint,
                                                const StateTrajectory& traj,
                                                const Targets& targets,
                                                const CostWeights& weights, double alpha);

} // namespace quench
