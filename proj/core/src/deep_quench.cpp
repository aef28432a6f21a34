#include "quench/deep_quench.hpp"

#include "quench/errors.hpp"

#include <cmath>

namespace quench {

std::vector<double> QuenchSchedule::alphas() const {
    validate();
    std::vector<double> out;
    for (double a = alpha0; a >= alpha_min * (1.0 - 1e-12); a *= ratio) out.push_back(a);
    return out;
}

void QuenchSchedule::validate() const {
    if (!(alpha0 > 0.0) || alpha0 > 1.0)
        throw std::invalid_argument("QuenchSchedule: alpha0 must lie in (0,1]");
    if (!(ratio > 0.0) || !(ratio < 1.0))
        throw std::invalid_argument("QuenchSchedule: ratio must lie in (0,1)");
    if (!(alpha_min > 0.0) || alpha_min > alpha0)
        throw std::invalid_argument("QuenchSchedule: need 0 < alpha_min <= alpha0");
}

MultiplierPair extract_multipliers(const Grid& grid, const Potentials& pot,
                                   const StateTrajectory& traj, const AdjointTrajectory& adjoint,
                                   double alpha) {
    if (traj.alpha != alpha || adjoint.alpha != alpha)
        throw std::invalid_argument("extract_multipliers: alpha mismatch between inputs");
    if (traj.steps() != adjoint.steps())
        throw std::invalid_argument("extract_multipliers: trajectory lengths disagree");
    const auto [phi, psi] = pot.scaling.quench(alpha);
    const int steps = traj.steps();

    MultiplierPair mp;
    mp.lambda = Eigen::MatrixXd::Zero(steps + 1, grid.num_nodes);
    mp.lambda_boundary = Eigen::MatrixXd::Zero(steps + 1, grid.num_boundary());
    for (int k = 0; k <= steps; ++k) {
        const Vector& y = traj.snapshots[k].y.bulk;
        const Vector& ytr = traj.snapshots[k].y.trace;
        const Vector& q = adjoint.snapshots[k].q.bulk;
        const Vector& qg = adjoint.snapshots[k].q.trace;
        for (int i = 0; i < grid.num_nodes; ++i)
            mp.lambda(k, i) = phi * pot.h.d2(y(i)) * q(i);
        for (int j = 0; j < grid.num_boundary(); ++j)
            mp.lambda_boundary(k, j) = psi * pot.h.d2(ytr(j)) * qg(j);
    }
    return mp;
}

ComplementarityMetrics complementarity_metrics(const Grid& grid, const Potentials& pot,
                                               const StateTrajectory& traj,
                                               const AdjointTrajectory& adjoint, double alpha) {
    const auto [phi, psi] = pot.scaling.quench(alpha);
    const int steps = traj.steps();
    const Vector c = time_quadrature(steps, traj.dt);
    const MultiplierPair mp = extract_multipliers(grid, pot, traj, adjoint, alpha);

    ComplementarityMetrics m;
    double sign_bulk = 0.0;     // accumulates int xi y - |xi| (exact box minimum)
    double sign_boundary = 0.0;
    for (int k = 0; k <= steps; ++k) {
        const Vector& y = traj.snapshots[k].y.bulk;
        const Vector& ytr = traj.snapshots[k].y.trace;
        const Vector& q = adjoint.snapshots[k].q.bulk;
        const Vector& qg = adjoint.snapshots[k].q.trace;

        for (int i = 0; i < grid.num_nodes; ++i) {
            const double lam = mp.lambda(k, i);
            m.lambda_q_integral += c(k) * grid.volume_weights(i) * lam * q(i);
            m.concentration_sup =
                std::max(m.concentration_sup, std::abs(lam * (1.0 - y(i) * y(i))));
            m.sup_q = std::max(m.sup_q, std::abs(q(i)));
            if (std::abs(y(i)) <= 0.9)
                m.interior_decay = std::max(m.interior_decay, std::abs(phi * pot.h.d1(y(i))));
            const double xi = phi * pot.h.d1(y(i));
            sign_bulk += c(k) * grid.volume_weights(i) * (xi * y(i) - std::abs(xi));
        }
        for (int j = 0; j < grid.num_boundary(); ++j) {
            const double lam = mp.lambda_boundary(k, j);
            m.lambda_q_boundary_integral += c(k) * grid.boundary_weights(j) * lam * qg(j);
            m.concentration_sup =
                std::max(m.concentration_sup, std::abs(lam * (1.0 - ytr(j) * ytr(j))));
            if (std::abs(ytr(j)) <= 0.9)
                m.interior_decay_boundary =
                    std::max(m.interior_decay_boundary, std::abs(psi * pot.h.d1(ytr(j))));
            const double xi = psi * pot.h.d1(ytr(j));
            sign_boundary += c(k) * grid.boundary_weights(j) * (xi * ytr(j) - std::abs(xi));
        }
    }
    m.concentration_bound = 2.0 * phi * pot.h.c_hat * m.sup_q;
    m.sign_certificate_bulk = sign_bulk;
    m.sign_certificate_boundary = sign_boundary;
    return m;
}

ComplementarityReport complementarity_report(const QuenchReport& report) {
    if (report.stages.empty() || report.failure_index >= 0 || report.stages.back().failed)
        throw std::invalid_argument(
            "complementarity_report: run incomplete (stage " +
            std::to_string(report.failure_index) + " failed)");

    ComplementarityReport out;
    out.lambda_q_nonnegative = true;
    out.interior_decay_decreasing = true;
    out.concentration_bound_holds = true;
    double prev_decay = std::numeric_limits<double>::infinity();
    for (const QuenchStage& st : report.stages) {
        out.alphas.push_back(st.alpha);
        out.per_stage.push_back(st.metrics);
        out.lambda_q_nonnegative = out.lambda_q_nonnegative &&
                                   st.metrics.lambda_q_integral >= 0.0 &&
                                   st.metrics.lambda_q_boundary_integral >= 0.0;
        out.interior_decay_decreasing =
            out.interior_decay_decreasing && st.metrics.interior_decay < prev_decay;
        prev_decay = st.metrics.interior_decay;
        out.concentration_bound_holds =
            out.concentration_bound_holds &&
            st.metrics.concentration_sup <= st.metrics.concentration_bound * (1.0 + 1e-12);
    }
    const ComplementarityMetrics& last = report.stages.back().metrics;
    out.final_interior_decay = last.interior_decay;
    out.final_sign_certificate_bulk = last.sign_certificate_bulk;
    out.final_sign_certificate_boundary = last.sign_certificate_boundary;
    return out;
}

QuenchReport run_quench(const ProblemSetup& setup, const QuenchSchedule& schedule,
                        const ControlField& u0,
                        const std::optional<BoundaryField>& anchor) {
    setup.validate();
    u0.check_shapes(setup.grid, setup.steps);
    const std::vector<double> alphas = schedule.alphas();
    const double dt = setup.dt();

    QuenchReport report;
    report.adapted = anchor.has_value();

    ControlField warm = u0;
    warm.values = project_admissible(u0.values, u0.lower, u0.upper);
    BoundaryField prev_control = warm.values;
    int consecutive_failures = 0;
    bool have_success = false;

    for (std::size_t n = 0; n < alphas.size(); ++n) {
        const double alpha = alphas[n];
        QuenchStage stage;
        stage.alpha = alpha;

        OptOptions opts = schedule.opt;
        // Loose barriers do not deserve tight solves; tighten with alpha.
        opts.tol = std::max(schedule.opt.tol, alpha * schedule.tol_factor);

        try {
            OptResult res = projected_gradient_descent(setup, warm, alpha, anchor, opts);
            stage.control = res.control;
            stage.cost = res.cost;
            stage.adapted_cost = res.adapted_cost;
            stage.vi_residual = res.vi_residual;
            stage.fixed_point_gap = res.fixed_point_gap;
            stage.budget_norm = res.budget_norm;
            stage.opt_iterations = res.iterations;
            stage.opt_converged = res.converged;
            if (have_success || n > 0) {
                const BoundaryField d = res.control.values - prev_control;
                stage.control_increment = sigma_norm(setup.grid, dt, d);
            }

            // Certificates at the stage optimum.
            const ReducedGradientResult rg =
                reduced_gradient(setup, res.control.values, alpha, anchor);
            stage.metrics =
                complementarity_metrics(setup.grid, setup.pot, rg.trajectory, rg.adjoint, alpha);
            stage.state_monitors = rg.trajectory.monitors;
            stage.adjoint_sup_h = rg.adjoint.sup_h_norm;
            stage.adjoint_l2_v = rg.adjoint.l2_v_norm;

            prev_control = res.control.values;
            warm.values = res.control.values;
            consecutive_failures = 0;
            have_success = true;

            if (n + 1 == alphas.size()) {
                report.final_state = rg.trajectory;
                report.final_adjoint = rg.adjoint;
                report.final_multipliers = extract_multipliers(setup.grid, setup.pot,
                                                               rg.trajectory, rg.adjoint, alpha);
            }
        } catch (const std::exception& err) {
            stage.failed = true;
            stage.error = err.what();
            if (report.failure_index < 0) report.failure_index = static_cast<int>(n);
            ++consecutive_failures;
        }
        report.stages.push_back(std::move(stage));
        if (consecutive_failures >= 2) break; // continuation lost its warm start
    }

    report.completed =
        report.stages.size() == alphas.size() && !report.stages.back().failed;
    return report;
}

} // namespace quench
