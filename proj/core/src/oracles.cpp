#include "quench/oracles.hpp"

#include "quench/elliptic.hpp"
#include "quench/errors.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace quench {

void FDGradientSpec::validate() const {
    if (steps.empty()) throw std::invalid_argument("FDGradientSpec: no step sizes");
    double prev = std::numeric_limits<double>::infinity();
    for (double s : steps) {
        if (!(s > 0.0) || s >= prev)
            throw std::invalid_argument("FDGradientSpec: steps must be positive and decreasing");
        prev = s;
    }
    if (n_directions < 1) throw std::invalid_argument("FDGradientSpec: need directions");
}

FDGradientReport fd_gradient(const ProblemSetup& setup, const ControlField& u, double alpha,
                             const FDGradientSpec& spec,
                             const std::optional<BoundaryField>& anchor) {
    spec.validate();
    u.check_shapes(setup.grid, setup.steps);
    const double dt = setup.dt();

    const ReducedGradientResult base = reduced_gradient(setup, u.values, alpha, anchor);

    auto cost_at = [&](const BoundaryField& v) {
        StateTrajectory traj = solve_state(setup.grid, setup.pot, setup.y0, v, alpha,
                                           setup.t_final, setup.steps, setup.controls);
        double val = compute_cost(setup.grid, traj, v, setup.weights, setup.targets);
        if (anchor) {
            const BoundaryField d = v - *anchor;
            val += 0.5 * sigma_inner(setup.grid, dt, d, d);
        }
        return val;
    };

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    FDGradientReport report;
    for (int dir = 0; dir < spec.n_directions; ++dir) {
        BoundaryField delta(u.values.rows(), u.values.cols());
        for (Eigen::Index k = 0; k < delta.rows(); ++k)
            for (Eigen::Index j = 0; j < delta.cols(); ++j) delta(k, j) = unit(rng);
        // Admissible tangent: no outward component where a bound is active.
        for (Eigen::Index k = 0; k < delta.rows(); ++k)
            for (Eigen::Index j = 0; j < delta.cols(); ++j) {
                if (u.values(k, j) >= u.upper(k, j) && delta(k, j) > 0.0) delta(k, j) = 0.0;
                if (u.values(k, j) <= u.lower(k, j) && delta(k, j) < 0.0) delta(k, j) = 0.0;
            }

        const double adjoint_value = sigma_inner(setup.grid, dt, base.gradient, delta);
        double best = std::numeric_limits<double>::infinity();
        for (double eps : spec.steps) {
            FDGradientRow row;
            row.direction = dir;
            row.step = eps;
            row.adjoint_value = adjoint_value;
            try {
                const double jp = cost_at(u.values + eps * delta);
                const double jm = cost_at(u.values - eps * delta);
                row.fd_value = (jp - jm) / (2.0 * eps);
                const double denom = std::max(std::abs(row.fd_value), std::abs(adjoint_value));
                row.rel_error =
                    denom > 0.0 ? std::abs(row.fd_value - adjoint_value) / denom : 0.0;
            } catch (const SolveError&) {
                row.fd_value = std::numeric_limits<double>::quiet_NaN();
                row.rel_error = std::numeric_limits<double>::infinity();
            }
            best = std::min(best, row.rel_error);
            report.table.push_back(row);
        }
        report.per_direction_best.push_back(best);
        report.best_rel_error = std::max(report.best_rel_error, best);
    }
    return report;
}

namespace {

struct PgsWorkspace {
    SparseMatrix P;     // M/dt + A + lifted boundary stiffness (linear smooth part)
    Vector diag;        // diagonal of P
    Vector mass;        // combined mass weights (volume + lifted boundary)
    Vector bulk_weight; // W
    Vector bdry_weight; // lifted W_Gamma (zero at interior nodes)
};

PgsWorkspace build_workspace(const Grid& grid, double dt) {
    PgsWorkspace ws;
    const int n = grid.num_nodes;
    ws.bulk_weight = grid.volume_weights;
    ws.bdry_weight = Vector::Zero(n);
    for (int j = 0; j < grid.num_boundary(); ++j)
        ws.bdry_weight(grid.chain_nodes[j]) += grid.boundary_weights(j);
    ws.mass = ws.bulk_weight + ws.bdry_weight;

    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < grid.stiffness.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(grid.stiffness, k); it; ++it)
            trip.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < grid.boundary_stiffness.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(grid.boundary_stiffness, k); it; ++it)
            trip.emplace_back(grid.chain_nodes[it.row()], grid.chain_nodes[it.col()], it.value());
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, ws.mass(i) / dt);
    ws.P.resize(n, n);
    ws.P.setFromTriplets(trip.begin(), trip.end());
    ws.diag = ws.P.diagonal();
    return ws;
}

// Scalar problem at one node: diag t + wf f2'(t) + wg g2'(t) = r on [-1, 1].
// Newton from the current value, then clamp.
double node_solve(const Potentials& pot, const PgsWorkspace& ws, int i, double r, double start,
                  int iters) {
    double t = std::clamp(start, -1.0, 1.0);
    const double wf = ws.bulk_weight(i);
    const double wg = ws.bdry_weight(i);
    for (int it = 0; it < iters; ++it) {
        const PotentialEval f = pot.f2.eval(t);
        PotentialEval g;
        if (wg != 0.0) g = pot.g2.eval(t);
        const double val = ws.diag(i) * t + wf * f.d1 + wg * g.d1 - r;
        const double slope = ws.diag(i) + wf * f.d2 + wg * g.d2;
        if (slope <= 0.0) break;
        const double t_new = t - val / slope;
        if (std::abs(t_new - t) < 1e-15) {
            t = t_new;
            break;
        }
        t = t_new;
    }
    return std::clamp(t, -1.0, 1.0);
}

// Projected Gauss-Seidel sweeps for a fixed total potential field.
void pgs_solve(const Grid& grid, const Potentials& pot, const PgsWorkspace& ws, const Vector& rhs,
               Vector& y, const ObstacleOptions& opts) {
    const int n = grid.num_nodes;
    for (int sweep = 0; sweep < opts.inner_cap; ++sweep) {
        double change = 0.0;
        for (int i = 0; i < n; ++i) {
            double off = 0.0;
            for (SparseMatrix::InnerIterator it(ws.P, i); it; ++it)
                if (it.row() != i) off += it.value() * y(it.row());
            const double r = rhs(i) - off;
            const double t = node_solve(pot, ws, i, r, y(i), opts.scalar_newton_iters);
            change = std::max(change, std::abs(t - y(i)));
            y(i) = t;
        }
        if (change <= opts.inner_tol) return;
    }
}

} // namespace

ObstacleStepResult obstacle_step_oracle(const Grid& grid, const Potentials& pot,
                                        const StateSnapshot& prev, const Vector& u_slice,
                                        double dt, const ObstacleOptions& opts) {
    if (grid.dim != 1)
        throw std::invalid_argument("obstacle_step_oracle: oracle path is 1D only");
    if (grid.num_nodes > opts.max_nodes)
        throw std::invalid_argument("obstacle_step_oracle: oracle limited to " +
                                    std::to_string(opts.max_nodes) + " nodes");
    if (u_slice.size() != grid.num_boundary())
        throw std::invalid_argument("obstacle_step_oracle: control slice size mismatch");

    const int n = grid.num_nodes;
    const Vector& y_prev = prev.y.bulk;
    const double m0 = grid.mean_value(y_prev);
    const PgsWorkspace ws = build_workspace(grid, dt);

    const Vector lifted_u = grid.lift_trace(grid.boundary_weights.cwiseProduct(u_slice));
    const Vector rhs_fixed = ws.mass.cwiseProduct(y_prev) / dt + lifted_u;

    Vector y = y_prev;
    double wbar = grid.mean_value(prev.w);
    Vector w0 = prev.w;
    w0.array() -= wbar;

    auto solve_for = [&](double wbar_try, Vector& y_io) {
        const Vector w = w0.array() + wbar_try;
        const Vector rhs = rhs_fixed + ws.bulk_weight.cwiseProduct(w);
        pgs_solve(grid, pot, ws, rhs, y_io, opts);
        return grid.mean_value(y_io);
    };

    // Secant on the potential mean to hold the mass; the mean response is
    // monotone in wbar (M-matrix + clamp), so plain secant with bracket
    // widening is enough.
    auto mass_constrained_solve = [&]() {
        double a = wbar;
        double mu_a = solve_for(a, y);
        if (std::abs(mu_a - m0) <= opts.mass_tol) return;
        double b = a + std::max(1e-3, 1e-3 * std::abs(a)) * (mu_a > m0 ? -1.0 : 1.0);
        double mu_b = solve_for(b, y);
        for (int it = 0; it < 100; ++it) {
            if (std::abs(mu_b - m0) <= opts.mass_tol) break;
            if (std::abs(mu_b - mu_a) < 1e-300) {
                b += (mu_b > m0 ? -1.0 : 1.0) * std::max(1.0, std::abs(b));
                mu_b = solve_for(b, y);
                continue;
            }
            const double next = b - (mu_b - m0) * (b - a) / (mu_b - mu_a);
            a = b;
            mu_a = mu_b;
            b = next;
            mu_b = solve_for(b, y);
        }
        wbar = b;
        if (std::abs(mu_b - m0) > 10.0 * opts.mass_tol)
            throw SolveError("obstacle_step_oracle: mass secant stalled at defect " +
                             std::to_string(mu_b - m0));
    };

    int outer = 0;
    bool converged = false;
    for (; outer < opts.outer_cap; ++outer) {
        mass_constrained_solve();

        // Picard update of the zero-mean potential from the mass-flux
        // equation A w = -W (y - y_prev)/dt.
        Vector defect = -(y - y_prev) / dt;
        defect.array() -= grid.mean_value(defect);
        const Vector w0_new = neumann_inverse(grid, defect);
        const double change = (w0_new - w0).cwiseAbs().maxCoeff();
        w0 = w0_new;
        const double scale = std::max(1.0, w0.cwiseAbs().maxCoeff() + std::abs(wbar));
        if (change <= opts.outer_tol * scale) {
            converged = true;
            ++outer;
            break;
        }
    }
    if (!converged)
        throw SolveError("obstacle_step_oracle: outer Picard iteration did not converge within " +
                         std::to_string(opts.outer_cap) + " updates");

    // Final polish at the converged potential.
    mass_constrained_solve();
    Vector w = w0.array() + wbar;

    // Multiplier from the smooth-equation residual scaled by the combined mass
    // weights: vanishes at free nodes up to solver tolerance, carries the
    // obstacle reaction where clamped (sign convention of the indicator
    // subdifferential: >= 0 at +1, <= 0 at -1).
    Vector g = ws.P * y - rhs_fixed - ws.bulk_weight.cwiseProduct(w);
    for (int i = 0; i < n; ++i) {
        g(i) += ws.bulk_weight(i) * pot.f2.d1(y(i));
        if (ws.bdry_weight(i) != 0.0) g(i) += ws.bdry_weight(i) * pot.g2.d1(y(i));
    }
    Vector xi = -g.cwiseQuotient(ws.mass);

    ObstacleStepResult result;
    result.snapshot.y = FieldPair::from_bulk(grid, std::move(y));
    result.snapshot.w = std::move(w);
    result.snapshot.t = prev.t + dt;
    result.snapshot.bound_margin = 1.0 - result.snapshot.y.bulk.cwiseAbs().maxCoeff();
    result.multiplier = std::move(xi);
    result.outer_iterations = outer;
    result.mass_error = std::abs(grid.mean_value(result.snapshot.y.bulk) - m0);
    double comp = 0.0;
    for (int i = 0; i < n; ++i)
        comp = std::max(comp, std::abs(result.multiplier(i)) *
                                  (1.0 - std::abs(result.snapshot.y.bulk(i))));
    result.complementarity_residual = comp;
    return result;
}

std::vector<ObstacleStepResult> obstacle_trajectory(const Grid& grid, const Potentials& pot,
                                                    const Vector& y0, const BoundaryField& u,
                                                    double t_final, int steps,
                                                    const ObstacleOptions& opts) {
    if (u.rows() != steps + 1 || u.cols() != grid.num_boundary())
        throw std::invalid_argument("obstacle_trajectory: control field shape mismatch");
    const double dt = t_final / steps;

    StateSnapshot current;
    current.y = FieldPair::from_bulk(grid, y0);
    Vector w0 = -grid.apply_laplacian(y0);
    for (int i = 0; i < grid.num_nodes; ++i) w0(i) += pot.f2.d1(y0(i));
    current.w = std::move(w0);
    current.t = 0.0;

    std::vector<ObstacleStepResult> out;
    out.reserve(steps);
    for (int k = 1; k <= steps; ++k) {
        ObstacleStepResult step =
            obstacle_step_oracle(grid, pot, current, u.row(k).transpose(), dt, opts);
        current = step.snapshot;
        out.push_back(std::move(step));
    }
    return out;
}

std::vector<QuenchObstacleRow> compare_quench_to_obstacle(const ProblemSetup& setup,
                                                          const BoundaryField& u,
                                                          const std::vector<double>& alphas,
                                                          const ObstacleOptions& opts) {
    const Grid& grid = setup.grid;
    const double dt = setup.dt();
    const Vector c = time_quadrature(setup.steps, dt);

    const auto oracle =
        obstacle_trajectory(grid, setup.pot, setup.y0, u, setup.t_final, setup.steps, opts);

    std::vector<QuenchObstacleRow> rows;
    rows.reserve(alphas.size());
    for (double alpha : alphas) {
        const StateTrajectory traj = solve_state(grid, setup.pot, setup.y0, u, alpha,
                                                 setup.t_final, setup.steps, setup.controls);
        double dist2 = 0.0;
        for (int k = 1; k <= setup.steps; ++k) {
            const Vector d = traj.snapshots[k].y.bulk - oracle[k - 1].snapshot.y.bulk;
            dist2 += c(k) * grid.integrate(d.cwiseProduct(d));
        }
        rows.push_back({alpha, std::sqrt(dist2)});
    }
    return rows;
}

} // namespace quench
