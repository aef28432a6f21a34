#include "quench/control.hpp"

#include "quench/errors.hpp"

#include <cmath>
#include <random>

namespace quench {

void ProblemSetup::validate() const {
    weights.validate();
    targets.check_shapes(grid, steps);
    if (steps < 1) throw std::invalid_argument("ProblemSetup: steps must be >= 1");
    if (!(t_final > 0.0)) throw std::invalid_argument("ProblemSetup: t_final must be positive");
    if (y0.size() != grid.num_nodes)
        throw std::invalid_argument("ProblemSetup: initial data size mismatch");
    pot.scaling.validate();
}

ControlField ControlField::constant_bounds(const Grid& grid, int steps, double value, double lo,
                                           double hi, double m0) {
    ControlField u;
    u.values = BoundaryField::Constant(steps + 1, grid.num_boundary(), value);
    u.lower = BoundaryField::Constant(steps + 1, grid.num_boundary(), lo);
    u.upper = BoundaryField::Constant(steps + 1, grid.num_boundary(), hi);
    u.m0_budget = m0;
    return u;
}

void ControlField::check_shapes(const Grid& grid, int steps) const {
    const auto rows = static_cast<Eigen::Index>(steps) + 1;
    const auto cols = static_cast<Eigen::Index>(grid.num_boundary());
    if (values.rows() != rows || values.cols() != cols || lower.rows() != rows ||
        lower.cols() != cols || upper.rows() != rows || upper.cols() != cols)
        throw std::invalid_argument("ControlField: shape mismatch with grid/time nodes");
    if ((lower.array() > upper.array()).any())
        throw ConfigError("control bounds must satisfy lower <= upper pointwise, violates (A1)");
}

bool ControlField::inside_bounds(double tol) const {
    return ((values.array() >= lower.array() - tol) && (values.array() <= upper.array() + tol))
        .all();
}

BoundaryField project_admissible(const BoundaryField& u, const BoundaryField& lower,
                                 const BoundaryField& upper) {
    if (u.rows() != lower.rows() || u.cols() != lower.cols() || u.rows() != upper.rows() ||
        u.cols() != upper.cols())
        throw std::invalid_argument("project_admissible: shape mismatch");
    return u.cwiseMax(lower).cwiseMin(upper);
}

double derivative_budget_norm(const Grid& grid, double dt, const BoundaryField& u) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k + 1 < u.rows(); ++k)
        for (int j = 0; j < grid.num_boundary(); ++j) {
            const double slope = (u(k + 1, j) - u(k, j)) / dt;
            sum += dt * grid.boundary_weights(j) * slope * slope;
        }
    return std::sqrt(sum);
}

double compute_cost(const Grid& grid, const StateTrajectory& traj, const BoundaryField& u,
                    const CostWeights& weights, const Targets& targets) {
    weights.validate();
    const int steps = traj.steps();
    targets.check_shapes(grid, steps);
    if (u.rows() != steps + 1 || u.cols() != grid.num_boundary())
        throw std::invalid_argument("compute_cost: control shape mismatch");

    const Vector c = time_quadrature(steps, traj.dt);
    double cost = 0.0;
    for (int k = 0; k <= steps; ++k) {
        double acc = 0.0;
        if (weights.beta1 != 0.0) {
            const Vector e = traj.snapshots[k].y.bulk - targets.z_q.row(k).transpose();
            acc += 0.5 * weights.beta1 * grid.integrate(e.cwiseProduct(e));
        }
        if (weights.beta2 != 0.0) {
            const Vector e = traj.snapshots[k].y.trace - targets.z_sigma.row(k).transpose();
            acc += 0.5 * weights.beta2 * grid.boundary_integrate(e.cwiseProduct(e));
        }
        if (weights.beta5 != 0.0) {
            const Vector uk = u.row(k).transpose();
            acc += 0.5 * weights.beta5 * grid.boundary_integrate(uk.cwiseProduct(uk));
        }
        cost += c(k) * acc;
    }
    return cost;
}

double compute_adapted_cost(const Grid& grid, const StateTrajectory& traj, const BoundaryField& u,
                            const CostWeights& weights, const Targets& targets,
                            const BoundaryField& anchor) {
    if (anchor.rows() != u.rows() || anchor.cols() != u.cols())
        throw std::invalid_argument("compute_adapted_cost: anchor shape mismatch");
    const BoundaryField d = u - anchor;
    return compute_cost(grid, traj, u, weights, targets) + 0.5 * sigma_inner(grid, traj.dt, d, d);
}

ReducedGradientResult reduced_gradient(const ProblemSetup& setup, const BoundaryField& u,
                                       double alpha,
                                       const std::optional<BoundaryField>& anchor) {
    ReducedGradientResult res;
    res.trajectory =
        solve_state(setup.grid, setup.pot, setup.y0, u, alpha, setup.t_final, setup.steps,
                    setup.controls);
    res.adjoint =
        solve_adjoint(setup.grid, setup.pot, res.trajectory, setup.targets, setup.weights, alpha);
    res.cost = compute_cost(setup.grid, res.trajectory, u, setup.weights, setup.targets);

    res.gradient = setup.weights.beta5 * u;
    for (int k = 1; k <= setup.steps; ++k)
        res.gradient.row(k) += res.adjoint.dual_trace(k).transpose();
    if (anchor) {
        res.gradient += u - *anchor;
        const BoundaryField d = u - *anchor;
        res.adapted_cost = res.cost + 0.5 * sigma_inner(setup.grid, setup.dt(), d, d);
    } else {
        res.adapted_cost = res.cost;
    }
    return res;
}

namespace {

// Gradient of the (optional) budget penalty sigma * max(0, r - M0)^2 where
// r = ||d_t u||: 2 sigma max(0, r - M0) / r * L u with L the forward-difference
// bilinear form, converted to the L2(Sigma) gradient convention.
BoundaryField budget_penalty_gradient(const Grid& grid, double dt, const BoundaryField& u,
                                      double m0, double sigma, double r) {
    BoundaryField g = BoundaryField::Zero(u.rows(), u.cols());
    if (sigma <= 0.0 || r <= m0 || r == 0.0) return g;
    const Vector c = time_quadrature(static_cast<int>(u.rows()) - 1, dt);
    for (Eigen::Index k = 0; k < u.rows(); ++k)
        for (int j = 0; j < grid.num_boundary(); ++j) {
            double lu = 0.0;
            if (k + 1 < u.rows()) lu -= (u(k + 1, j) - u(k, j)) / dt;
            if (k > 0) lu += (u(k, j) - u(k - 1, j)) / dt;
            lu *= grid.boundary_weights(j);
            g(k, j) = 2.0 * sigma * (r - m0) / r * lu / (c(k) * grid.boundary_weights(j));
        }
    return g;
}

} // namespace

OptResult projected_gradient_descent(const ProblemSetup& setup, const ControlField& u0,
                                     double alpha, const std::optional<BoundaryField>& anchor,
                                     const OptOptions& opts) {
    u0.check_shapes(setup.grid, setup.steps);
    const Grid& grid = setup.grid;
    const double dt = setup.dt();

    OptResult result;
    result.control = u0;
    result.control.values = project_admissible(u0.values, u0.lower, u0.upper);

    auto objective = [&](const BoundaryField& u, StateTrajectory& traj_out) {
        traj_out = solve_state(grid, setup.pot, setup.y0, u, alpha, setup.t_final, setup.steps,
                               setup.controls);
        double val = compute_cost(grid, traj_out, u, setup.weights, setup.targets);
        if (anchor) {
            const BoundaryField d = u - *anchor;
            val += 0.5 * sigma_inner(grid, dt, d, d);
        }
        if (opts.sigma_penalty > 0.0) {
            const double r = derivative_budget_norm(grid, dt, u);
            const double excess = std::max(0.0, r - u0.m0_budget);
            val += opts.sigma_penalty * excess * excess;
        }
        return val;
    };

    auto gradient_at = [&](const BoundaryField& u, const StateTrajectory& traj,
                           AdjointTrajectory& adj_out) {
        adj_out = solve_adjoint(grid, setup.pot, traj, setup.targets, setup.weights, alpha);
        BoundaryField g = setup.weights.beta5 * u;
        for (int k = 1; k <= setup.steps; ++k)
            g.row(k) += adj_out.dual_trace(k).transpose();
        if (anchor) g += u - *anchor;
        if (opts.sigma_penalty > 0.0) {
            const double r = derivative_budget_norm(grid, dt, u);
            g += budget_penalty_gradient(grid, dt, u, u0.m0_budget, opts.sigma_penalty, r);
        }
        return g;
    };

    BoundaryField u = result.control.values;
    StateTrajectory traj;
    double value = objective(u, traj);
    AdjointTrajectory adj;
    BoundaryField g = gradient_at(u, traj, adj);

    result.cost_history.push_back(value);

    BoundaryField u_prev, g_prev;
    double step = opts.initial_step;
    bool have_prev = false;

    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        const BoundaryField mapped = project_admissible(u - g, u0.lower, u0.upper);
        const double grad_map = sigma_norm(grid, dt, u - mapped);
        result.gradient_map_history.push_back(grad_map);
        if (grad_map <= opts.tol) {
            result.converged = true;
            break;
        }

        if (have_prev) {
            const BoundaryField du = u - u_prev;
            const BoundaryField dg = g - g_prev;
            const double num = sigma_inner(grid, dt, du, du);
            const double den = sigma_inner(grid, dt, du, dg);
            step = den > 0.0 ? num / den : opts.step_max;
            step = std::clamp(step, opts.step_min, opts.step_max);
        }

        double s = step;
        bool accepted = false;
        bool stalled = false;
        BoundaryField u_try;
        StateTrajectory traj_try;
        double value_try = 0.0;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            u_try = project_admissible(u - s * g, u0.lower, u0.upper);
            const double decrease = sigma_inner(grid, dt, g, u_try - u);
            if (sigma_norm(grid, dt, u_try - u) == 0.0) { // no representable movement
                stalled = true;
                break;
            }
            value_try = objective(u_try, traj_try);
            if (value_try <= value + opts.armijo * decrease) {
                accepted = true;
                break;
            }
            s *= opts.backtrack;
        }
        if (stalled) break;
        if (!accepted)
            throw SolveError("projected_gradient_descent: line search failed at iteration " +
                                 std::to_string(iter),
                             result.cost_history);

        u_prev = u;
        g_prev = g;
        u = u_try;
        traj = std::move(traj_try);
        value = value_try;
        g = gradient_at(u, traj, adj);
        result.cost_history.push_back(value);
        result.step_history.push_back(s);
        have_prev = true;
    }
    result.iterations = iter;

    result.control.values = u;
    result.gradient = g;
    result.cost = compute_cost(grid, traj, u, setup.weights, setup.targets);
    result.adapted_cost = result.cost;
    if (anchor) {
        const BoundaryField d = u - *anchor;
        result.adapted_cost += 0.5 * sigma_inner(grid, dt, d, d);
    }
    result.budget_norm = derivative_budget_norm(grid, dt, u);
    result.budget_active = result.budget_norm >= u0.m0_budget;
    result.vi_residual = vi_residual(grid, dt, u, g, u0.lower, u0.upper, 16, 0x5eed);
    if (setup.weights.beta5 > 0.0) {
        // Effective dual trace: at a box-stationary point u = clamp(-q_eff/beta5)
        // with q_eff = g - beta5 u (includes anchor/penalty contributions).
        const BoundaryField q_eff = g - setup.weights.beta5 * u;
        result.fixed_point_gap = check_projection_fixed_point(grid, dt, u, q_eff,
                                                              setup.weights.beta5, u0.lower,
                                                              u0.upper);
    }
    return result;
}

double vi_residual(const Grid& grid, double dt, const BoundaryField& u_star,
                   const BoundaryField& g_star, const BoundaryField& lower,
                   const BoundaryField& upper, int n_samples, std::uint64_t seed) {
    if (u_star.rows() != g_star.rows() || u_star.cols() != g_star.cols())
        throw std::invalid_argument("vi_residual: shape mismatch");

    auto pairing = [&](const BoundaryField& v) {
        return sigma_inner(grid, dt, g_star, v - u_star);
    };

    // Exact box minimizer: the far bound against the gradient sign.
    BoundaryField v_exact(u_star.rows(), u_star.cols());
    for (Eigen::Index k = 0; k < u_star.rows(); ++k)
        for (Eigen::Index j = 0; j < u_star.cols(); ++j)
            v_exact(k, j) = g_star(k, j) > 0.0 ? lower(k, j) : upper(k, j);
    double best = pairing(v_exact);

    best = std::min(best, pairing(lower));
    best = std::min(best, pairing(upper));
    best = std::min(best, 0.0); // v = u_star contributes zero

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int s = 0; s < n_samples; ++s) {
        BoundaryField v(u_star.rows(), u_star.cols());
        for (Eigen::Index k = 0; k < v.rows(); ++k)
            for (Eigen::Index j = 0; j < v.cols(); ++j)
                v(k, j) = lower(k, j) + unit(rng) * (upper(k, j) - lower(k, j));
        best = std::min(best, pairing(v));
    }
    return best;
}

double check_projection_fixed_point(const Grid& grid, double dt, const BoundaryField& u_star,
                                    const BoundaryField& q_gamma_star, double beta5,
                                    const BoundaryField& lower, const BoundaryField& upper) {
    if (!(beta5 > 0.0))
        throw std::invalid_argument(
            "check_projection_fixed_point: not applicable for beta5 = 0");
    const BoundaryField candidate =
        project_admissible((-1.0 / beta5) * q_gamma_star, lower, upper);
    return sigma_norm(grid, dt, u_star - candidate);
}

} // namespace quench
