#include "quench/state.hpp"

#include "quench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace quench {

namespace detail {

StepSystem::StepSystem(const Grid& g, const Potentials& p, double a, double step)
    : grid(g), pot(p), alpha(a), dt(step) {
    auto [ph, ps] = pot.scaling.quench(alpha);
    phi = ph;
    psi = ps;
    if (!(dt > 0.0)) throw std::invalid_argument("StepSystem: dt must be positive");
}

Vector StepSystem::mass_apply(const Vector& y) const {
    Vector out = grid.volume_weights.cwiseProduct(y);
    for (int j = 0; j < grid.num_boundary(); ++j) {
        const int node = grid.chain_nodes[j];
        out(node) += grid.boundary_weights(j) * y(node);
    }
    return out;
}

Vector StepSystem::residual(const Vector& y, const Vector& w, const Vector& y_prev,
                            const Vector& u_slice) const {
    const int n = grid.num_nodes;
    const int nb = grid.num_boundary();
    const Vector& W = grid.volume_weights;

    Vector F(2 * n);
    const Vector dy = (y - y_prev) / dt;

    // Mass-flux equation: W d_t y + A w = 0.
    F.head(n) = W.cwiseProduct(dy) + grid.stiffness * w;

    // Potential equation (trace identified with the bulk values on the chain).
    Vector f2 = W.cwiseProduct(w) - W.cwiseProduct(dy) - grid.stiffness * y;
    for (int i = 0; i < n; ++i) {
        const double barrier = phi * pot.h.d1(y(i));
        f2(i) -= W(i) * (barrier + pot.f2.d1(y(i)));
    }
    const Vector y_tr = grid.trace_of(y);
    const Vector yprev_tr = grid.trace_of(y_prev);
    Vector bdry = grid.boundary_weights.cwiseProduct((y_tr - yprev_tr) / dt);
    bdry += grid.boundary_stiffness * y_tr;
    for (int j = 0; j < nb; ++j)
        bdry(j) += grid.boundary_weights(j) *
                   (psi * pot.h.d1(y_tr(j)) + pot.g2.d1(y_tr(j)) - u_slice(j));
    f2 -= grid.lift_trace(bdry);
    F.tail(n) = f2;
    return F;
}

SparseMatrix StepSystem::coupling_matrix(const Vector& y) const {
    const int n = grid.num_nodes;
    const int nb = grid.num_boundary();
    const Vector& W = grid.volume_weights;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(grid.stiffness.nonZeros() + grid.boundary_stiffness.nonZeros() + n + 3 * nb);

    for (int k = 0; k < grid.stiffness.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(grid.stiffness, k); it; ++it)
            trip.emplace_back(it.row(), it.col(), it.value());

    for (int i = 0; i < n; ++i) {
        const double diag = W(i) * (1.0 / dt + phi * pot.h.d2(y(i)) + pot.f2.d2(y(i)));
        trip.emplace_back(i, i, diag);
    }

    for (int k = 0; k < grid.boundary_stiffness.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(grid.boundary_stiffness, k); it; ++it)
            trip.emplace_back(grid.chain_nodes[it.row()], grid.chain_nodes[it.col()], it.value());

    for (int j = 0; j < nb; ++j) {
        const int node = grid.chain_nodes[j];
        const double yv = y(node);
        const double diag =
            grid.boundary_weights(j) * (1.0 / dt + psi * pot.h.d2(yv) + pot.g2.d2(yv));
        trip.emplace_back(node, node, diag);
    }

    SparseMatrix C(n, n);
    C.setFromTriplets(trip.begin(), trip.end());
    return C;
}

namespace {

SparseMatrix assemble_blocks(const Grid& grid, const SparseMatrix& tl_diag_weights, double tl_scale,
                             const SparseMatrix& tr, double tr_scale, const SparseMatrix& bl,
                             double bl_scale, const Vector& br_diag) {
    const int n = grid.num_nodes;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(tl_diag_weights.nonZeros() + tr.nonZeros() + bl.nonZeros() + n);

    for (int k = 0; k < tl_diag_weights.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(tl_diag_weights, k); it; ++it)
            trip.emplace_back(it.row(), it.col(), tl_scale * it.value());
    for (int k = 0; k < tr.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(tr, k); it; ++it)
            trip.emplace_back(it.row(), n + it.col(), tr_scale * it.value());
    for (int k = 0; k < bl.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(bl, k); it; ++it)
            trip.emplace_back(n + it.row(), it.col(), bl_scale * it.value());
    for (int i = 0; i < n; ++i) trip.emplace_back(n + i, n + i, br_diag(i));

    SparseMatrix J(2 * n, 2 * n);
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

SparseMatrix diagonal_sparse(const Vector& d) {
    SparseMatrix D(d.size(), d.size());
    D.reserve(Eigen::VectorXi::Constant(d.size(), 1));
    for (Eigen::Index i = 0; i < d.size(); ++i) D.insert(i, i) = d(i);
    D.makeCompressed();
    return D;
}

} // namespace

SparseMatrix StepSystem::jacobian(const Vector& y) const {
    const SparseMatrix C = coupling_matrix(y);
    const SparseMatrix Wd = diagonal_sparse(grid.volume_weights);
    return assemble_blocks(grid, Wd, 1.0 / dt, grid.stiffness, 1.0, C, -1.0,
                           grid.volume_weights);
}

SparseMatrix StepSystem::jacobian_transpose(const Vector& y) const {
    const SparseMatrix C = coupling_matrix(y);
    const SparseMatrix Wd = diagonal_sparse(grid.volume_weights);
    return assemble_blocks(grid, Wd, 1.0 / dt, C, -1.0, grid.stiffness, 1.0,
                           grid.volume_weights);
}

} // namespace detail

namespace {

double max_abs(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

// Largest s in (0,1] keeping |y + s d| <= bound node-wise.
double fraction_to_boundary(const Vector& y, const Vector& d, double bound) {
    double s = 1.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (d(i) > 0.0) s = std::min(s, (bound - y(i)) / d(i));
        else if (d(i) < 0.0) s = std::min(s, (-bound - y(i)) / d(i));
    }
    return std::max(s, 0.0);
}

StateSnapshot newton_step(const detail::StepSystem& sys, const StateSnapshot& prev,
                          const Vector& u_slice, const StepControls& controls,
                          const Vector& y_init, const Vector& w_init) {
    const Grid& grid = sys.grid;
    Vector y = y_init;
    Vector w = w_init;

    std::vector<double> history;
    Vector F = sys.residual(y, w, prev.y.bulk, u_slice);
    double fnorm = F.norm();
    history.push_back(fnorm);

    int iter = 0;
    int stagnations = 0;
    SparseLu lu;
    while (fnorm > controls.newton_tol) {
        if (iter >= controls.newton_max_iter)
            throw SolveError("step_state: Newton did not reach tolerance " +
                                 std::to_string(controls.newton_tol) + " after " +
                                 std::to_string(iter) + " iterations",
                             history);
        lu.factorize(sys.jacobian(y));
        const Vector delta = lu.solve(-F);
        const Vector dy = delta.head(grid.num_nodes);
        const Vector dw = delta.tail(grid.num_nodes);

        const double margin_prev = 1.0 - max_abs(y);
        const double bound = 1.0 - controls.ftb_factor * margin_prev;
        double s = fraction_to_boundary(y, dy, bound);
        if (s <= 0.0)
            throw SolveError("step_state: fraction-to-boundary step collapsed", history);

        double best_norm = std::numeric_limits<double>::infinity();
        Vector best_y, best_w, best_F;
        for (int half = 0; half < 9; ++half) {
            Vector y_trial = y + s * dy;
            Vector w_trial = w + s * dw;
            Vector F_trial = sys.residual(y_trial, w_trial, prev.y.bulk, u_slice);
            const double tnorm = F_trial.norm();
            if (tnorm < best_norm) {
                best_norm = tnorm;
                best_y.swap(y_trial);
                best_w.swap(w_trial);
                best_F.swap(F_trial);
            }
            if (tnorm <= (1.0 - 1e-4 * s) * fnorm) break;
            s *= 0.5;
        }
        if (best_norm >= fnorm) {
            if (++stagnations >= 3)
                throw SolveError("step_state: damped Newton stagnated at residual " +
                                     std::to_string(fnorm),
                                 history);
        } else {
            stagnations = 0;
        }
        y.swap(best_y);
        w.swap(best_w);
        F.swap(best_F);
        fnorm = best_norm;
        history.push_back(fnorm);
        ++iter;
    }

    StateSnapshot next;
    next.y = FieldPair::from_bulk(grid, std::move(y));
    next.w = std::move(w);
    next.t = prev.t + sys.dt;
    next.newton_iterations = iter;
    next.newton_residual = fnorm;
    next.bound_margin = 1.0 - max_abs(next.y.bulk);
    return next;
}

} // namespace

StateSnapshot step_state(const Grid& grid, const Potentials& pot, const StateSnapshot& prev,
                         const Vector& u_slice, double alpha, double dt,
                         const StepControls& controls) {
    if (u_slice.size() != grid.num_boundary())
        throw std::invalid_argument("step_state: control slice size mismatch");
    if (prev.y.bulk.size() != grid.num_nodes)
        throw std::invalid_argument("step_state: previous state size mismatch");
    detail::StepSystem sys(grid, pot, alpha, dt);
    return newton_step(sys, prev, u_slice, controls, prev.y.bulk, prev.w);
}

StateTrajectory solve_state(const Grid& grid, const Potentials& pot, const Vector& y0,
                            const BoundaryField& u, double alpha, double t_final, int steps,
                            const StepControls& controls) {
    if (y0.size() != grid.num_nodes)
        throw std::invalid_argument("solve_state: initial data size mismatch");
    if (steps < 1) throw std::invalid_argument("solve_state: need at least one step");
    if (u.rows() != steps + 1 || u.cols() != grid.num_boundary())
        throw std::invalid_argument("solve_state: control field must be (steps+1) x boundary");
    if (max_abs(y0) >= 1.0)
        throw std::invalid_argument("solve_state: initial data must satisfy -1 < y0 < 1 strictly");

    StateTrajectory traj;
    traj.dt = t_final / steps;
    traj.alpha = alpha;
    traj.m0 = grid.mean_value(y0);

    detail::StepSystem sys(grid, pot, alpha, traj.dt);

    StateSnapshot init;
    init.y = FieldPair::from_bulk(grid, y0);
    // Quasi-static potential for the initial snapshot (the time derivative at
    // t = 0 is not part of the data); used as Newton warm start and in exports.
    const auto [phi, psi] = pot.scaling.quench(alpha);
    Vector w0 = -grid.apply_laplacian(y0);
    for (int i = 0; i < grid.num_nodes; ++i)
        w0(i) += phi * pot.h.d1(y0(i)) + pot.f2.d1(y0(i));
    init.w = std::move(w0);
    init.t = 0.0;
    init.bound_margin = 1.0 - max_abs(y0);
    traj.snapshots.push_back(std::move(init));

    for (int k = 1; k <= steps; ++k) {
        const StateSnapshot& prev = traj.snapshots.back();
        const Vector u_new = u.row(k).transpose();
        StateSnapshot next;
        bool done = false;
        std::string last_error;
        for (int attempt = 0; attempt <= controls.retry_cap && !done; ++attempt) {
            try {
                if (attempt == 0) {
                    next = step_state(grid, pot, prev, u_new, alpha, traj.dt, controls);
                } else {
                    // Predictor: walk the same interval with 2^attempt implicit
                    // substeps (interpolated control), then re-solve the macro
                    // step from that warm start so the accepted step keeps the
                    // single-step structure the adjoint relies on.
                    const int m = 1 << attempt;
                    const Vector u_old = u.row(k - 1).transpose();
                    StateSnapshot walker = prev;
                    for (int j = 1; j <= m; ++j) {
                        const double theta = static_cast<double>(j) / m;
                        const Vector u_sub = (1.0 - theta) * u_old + theta * u_new;
                        walker = step_state(grid, pot, walker, u_sub, alpha, traj.dt / m, controls);
                    }
                    next = newton_step(sys, prev, u_new, controls, walker.y.bulk, walker.w);
                }
                done = true;
            } catch (const SolveError& err) {
                last_error = err.what();
            }
        }
        if (!done)
            throw SolveError("solve_state: step " + std::to_string(k) +
                             " failed after retries: " + last_error);
        traj.snapshots.push_back(std::move(next));
    }

    // Boundedness monitors.
    StateMonitors mon;
    for (int k = 0; k <= steps; ++k) {
        const StateSnapshot& s = traj.snapshots[k];
        const Vector& y = s.y.bulk;
        const Vector& ytr = s.y.trace;
        mon.sup_h1_bulk = std::max(
            mon.sup_h1_bulk,
            std::sqrt(grid.integrate(y.cwiseProduct(y)) + grid.dirichlet_form(y, y)));
        mon.sup_h1_boundary =
            std::max(mon.sup_h1_boundary,
                     std::sqrt(grid.boundary_integrate(ytr.cwiseProduct(ytr)) +
                               grid.boundary_dirichlet_form(ytr, ytr)));
        const Vector lap = grid.apply_laplacian(y);
        mon.l2_h2_bulk += traj.dt * grid.integrate(lap.cwiseProduct(lap));
        const Vector lap_b = grid.apply_laplace_beltrami(ytr);
        mon.l2_h2_boundary += traj.dt * grid.boundary_integrate(lap_b.cwiseProduct(lap_b));
        mon.max_mass_drift = std::max(mon.max_mass_drift, std::abs(grid.mean_value(y) - traj.m0));
        mon.min_bound_margin = std::min(mon.min_bound_margin, s.bound_margin);
        if (k > 0) {
            const Vector dy = (y - traj.snapshots[k - 1].y.bulk) / traj.dt;
            const Vector dtr = (ytr - traj.snapshots[k - 1].y.trace) / traj.dt;
            mon.dt_l2_bulk += traj.dt * grid.integrate(dy.cwiseProduct(dy));
            mon.dt_l2_boundary += traj.dt * grid.boundary_integrate(dtr.cwiseProduct(dtr));
        }
    }
    mon.dt_l2_bulk = std::sqrt(mon.dt_l2_bulk);
    mon.dt_l2_boundary = std::sqrt(mon.dt_l2_boundary);
    mon.l2_h2_bulk = std::sqrt(mon.l2_h2_bulk);
    mon.l2_h2_boundary = std::sqrt(mon.l2_h2_boundary);
    traj.monitors = mon;
    return traj;
}

std::vector<double> state_residual(const Grid& grid, const Potentials& pot,
                                   const StateTrajectory& traj, const BoundaryField& u,
                                   double alpha) {
    std::vector<double> out;
    const int steps = traj.steps();
    if (steps <= 0) return out;
    detail::StepSystem sys(grid, pot, alpha, traj.dt);
    out.reserve(steps);
    for (int k = 1; k <= steps; ++k) {
        const Vector F = sys.residual(traj.snapshots[k].y.bulk, traj.snapshots[k].w,
                                      traj.snapshots[k - 1].y.bulk, u.row(k).transpose());
        out.push_back(F.norm());
    }
    return out;
}

double energy(const Grid& grid, const Potentials& pot, const StateSnapshot& snap,
              const Vector& u_slice, double alpha) {
    const auto [phi, psi] = pot.scaling.quench(alpha);
    const Vector& y = snap.y.bulk;
    const Vector& ytr = snap.y.trace;
    double e = 0.5 * grid.dirichlet_form(y, y);
    for (int i = 0; i < grid.num_nodes; ++i)
        e += grid.volume_weights(i) * (phi * pot.h.value(y(i)) + pot.f2.eval(y(i)).value);
    e += 0.5 * grid.boundary_dirichlet_form(ytr, ytr);
    for (int j = 0; j < grid.num_boundary(); ++j)
        e += grid.boundary_weights(j) * (psi * pot.h.value(ytr(j)) + pot.g2.eval(ytr(j)).value -
                                         u_slice(j) * ytr(j));
    return e;
}

} // namespace quench
