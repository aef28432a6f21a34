#pragma once

#include "quench/control.hpp"

namespace quench {

/// Geometric continuation schedule alpha0 * ratio^k down to alpha_min.
struct QuenchSchedule {
    double alpha0 = 1.0;
    double ratio = 0.5;
    double alpha_min = 1.0 / 1024.0;
    OptOptions opt;              // per-stage optimizer options (tol is the base)
    double tol_factor = 1e-4;    // stage tolerance max(opt.tol, alpha * tol_factor)

    std::vector<double> alphas() const;
    void validate() const;
};

/// Barrier multipliers lambda = phi(alpha) h''(y) q on Q and the corresponding
/// boundary pair, stored per time node.
struct MultiplierPair {
    Eigen::MatrixXd lambda;          // (K+1) x N
    Eigen::MatrixXd lambda_boundary; // (K+1) x NB
};

struct ComplementarityMetrics {
    double lambda_q_integral = 0.0;          // integral of lambda q over Q (>= 0 exactly)
    double lambda_q_boundary_integral = 0.0; // boundary counterpart
    double interior_decay = 0.0;             // max over |y| <= 0.9 of |phi h'(y)|
    double interior_decay_boundary = 0.0;
    double concentration_sup = 0.0;   // sup |lambda (1 - y^2)|
    double concentration_bound = 0.0; // 2 phi c_hat sup|q|
    double sign_certificate_bulk = 0.0;     // exact box min of int xi (y - z), z in [-1,1]
    double sign_certificate_boundary = 0.0;
    double sup_q = 0.0;
};

struct QuenchStage {
    double alpha = 0.0;
    ControlField control;
    double cost = 0.0;
    double adapted_cost = 0.0;
    double control_increment = 0.0; // ||u_n - u_{n-1}||_{L2(Sigma)}
    double vi_residual = 0.0;
    double fixed_point_gap = 0.0;
    double budget_norm = 0.0;
    int opt_iterations = 0;
    bool opt_converged = false;
    bool failed = false;
    std::string error;
    ComplementarityMetrics metrics;
    StateMonitors state_monitors;
    double adjoint_sup_h = 0.0;
    double adjoint_l2_v = 0.0;
};

struct QuenchReport {
    std::vector<QuenchStage> stages;
    bool completed = false;
    int failure_index = -1; // first failed stage, -1 if none
    bool adapted = false;
    // Full fields at the final stage, for exports and certificates.
    StateTrajectory final_state;
    AdjointTrajectory final_adjoint;
    MultiplierPair final_multipliers;
};

/// Runs the continuation over the schedule, warm-starting each stage from the
/// previous optimum. With an anchor the stages solve the adapted problems;
/// without one the plain problems. Aborts after two consecutive stage
/// failures.
QuenchReport run_quench(const ProblemSetup& setup, const QuenchSchedule& schedule,
                        const ControlField& u0,
                        const std::optional<BoundaryField>& anchor = std::nullopt);

/// Pointwise products phi(alpha) h''(y) q and psi(alpha) h''(y_Gamma) q_Gamma.
/// Inputs must come from the same alpha.
MultiplierPair extract_multipliers(const Grid& grid, const Potentials& pot,
                                   const StateTrajectory& traj, const AdjointTrajectory& adjoint,
                                   double alpha);

/// Per-stage complementarity metrics from the trajectories at one alpha.
ComplementarityMetrics complementarity_metrics(const Grid& grid, const Potentials& pot,
                                               const StateTrajectory& traj,
                                               const AdjointTrajectory& adjoint, double alpha);

/// Certificate summary over a completed continuation: the per-stage metrics
/// plus the aggregate pass/fail facts the limit system asks for.
struct ComplementarityReport {
    std::vector<double> alphas;
    std::vector<ComplementarityMetrics> per_stage;
    bool lambda_q_nonnegative = false;   // at every stage, bulk and boundary
    bool interior_decay_decreasing = false;
    bool concentration_bound_holds = false; // sup |lambda (1-y^2)| <= 2 phi c sup|q|
    double final_interior_decay = 0.0;
    double final_sign_certificate_bulk = 0.0;
    double final_sign_certificate_boundary = 0.0;
};

/// Aggregates the recorded stages of a quench run. Requires the report to
/// cover its schedule through the final stage.
ComplementarityReport complementarity_report(const QuenchReport& report);

} // namespace quench
