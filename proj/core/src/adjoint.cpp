#include "quench/adjoint.hpp"

#include "quench/elliptic.hpp"
#include "quench/errors.hpp"

#include <cmath>

namespace quench {

Vector AdjointTrajectory::dual_trace(int k) const {
    if (k < 0 || k > steps()) throw std::invalid_argument("dual_trace: index out of range");
    if (k == 0) return Vector::Zero(snapshots.front().q.trace.size());
    return snapshots[k - 1].q.trace;
}

AdjointTrajectory solve_adjoint(const Grid& grid, const Potentials& pot,
                                const StateTrajectory& traj, const Targets& targets,
                                const CostWeights& weights, double alpha) {
    weights.validate();
    const int steps = traj.steps();
    if (steps < 1) throw std::invalid_argument("solve_adjoint: trajectory has no steps");
    targets.check_shapes(grid, steps);
    if (traj.alpha != alpha)
        throw std::invalid_argument("solve_adjoint: alpha does not match the trajectory");

    const int n = grid.num_nodes;
    const double dt = traj.dt;
    const Vector c = time_quadrature(steps, dt);
    detail::StepSystem sys(grid, pot, alpha, dt);

    AdjointTrajectory adj;
    adj.dt = dt;
    adj.alpha = alpha;
    adj.weights = weights;
    adj.snapshots.resize(steps + 1);

    AdjointSnapshot terminal;
    terminal.q.bulk = Vector::Zero(n);
    terminal.q.trace = Vector::Zero(grid.num_boundary());
    terminal.p = Vector::Zero(n);
    terminal.t = traj.snapshots[steps].t;
    adj.snapshots[steps] = std::move(terminal);

    Vector a_next, b_next; // multiplier of step k+1
    SparseLu lu;
    for (int k = steps; k >= 1; --k) {
        const Vector& y_k = traj.snapshots[k].y.bulk;

        Vector rhs(2 * n);
        Vector rhs_y = Vector::Zero(n);
        if (weights.beta1 != 0.0) {
            const Vector eq = y_k - targets.z_q.row(k).transpose();
            rhs_y -= c(k) * weights.beta1 * grid.volume_weights.cwiseProduct(eq);
        }
        if (weights.beta2 != 0.0) {
            const Vector es = traj.snapshots[k].y.trace - targets.z_sigma.row(k).transpose();
            rhs_y -= c(k) * weights.beta2 *
                     grid.lift_trace(grid.boundary_weights.cwiseProduct(es));
        }
        if (k < steps) {
            rhs_y += grid.volume_weights.cwiseProduct(a_next) / dt;
            rhs_y -= sys.mass_apply(b_next) / dt;
        }
        rhs.head(n) = rhs_y;
        rhs.tail(n).setZero();

        lu.factorize(sys.jacobian_transpose(y_k));
        const Vector mu = lu.solve(rhs);
        Vector a = mu.head(n);
        Vector b = mu.tail(n);

        AdjointSnapshot snap;
        snap.q.bulk = b / c(k);
        snap.q.trace = grid.trace_of(snap.q.bulk);
        snap.p = -a / c(k);
        snap.t = traj.snapshots[k - 1].t;
        adj.snapshots[k - 1] = std::move(snap);

        a_next.swap(a);
        b_next.swap(b);
    }

    for (int j = 0; j <= steps; ++j) {
        const AdjointSnapshot& s = adj.snapshots[j];
        const double h_norm = std::sqrt(grid.integrate(s.q.bulk.cwiseProduct(s.q.bulk)) +
                                        grid.boundary_integrate(s.q.trace.cwiseProduct(s.q.trace)));
        adj.sup_h_norm = std::max(adj.sup_h_norm, h_norm);
        adj.l2_v_norm += dt * (grid.dirichlet_form(s.q.bulk, s.q.bulk) +
                               grid.boundary_dirichlet_form(s.q.trace, s.q.trace) +
                               h_norm * h_norm);
    }
    adj.l2_v_norm = std::sqrt(adj.l2_v_norm);
    return adj;
}

std::vector<Vector> reconstruct_p(const Grid& grid, const Potentials& pot,
                                  const AdjointTrajectory& adjoint, const StateTrajectory& traj,
                                  const Targets& targets, const CostWeights& weights,
                                  double alpha) {
    const int steps = traj.steps();
    if (adjoint.steps() != steps)
        throw std::invalid_argument("reconstruct_p: trajectory shapes disagree");
    if (adjoint.alpha != alpha || traj.alpha != alpha)
        throw std::invalid_argument("reconstruct_p: alpha mismatch");

    const double dt = traj.dt;
    const Vector c = time_quadrature(steps, dt);
    const auto [phi, psi] = pot.scaling.quench(alpha);

    std::vector<Vector> p(steps + 1);
    p[steps] = Vector::Zero(grid.num_nodes);

    // Mean recursion over multiplier levels k = steps..1 (stored at slot k-1):
    // backward accumulation of the potential-equation mean balance, the
    // discrete form of the time-integral mean-value formula.
    double mean_next = 0.0;          // mean(p) at multiplier level k+1
    Vector qgam_next;                // trace of q at level k+1
    for (int k = steps; k >= 1; --k) {
        const AdjointSnapshot& snap = adjoint.snapshots[k - 1];
        const Vector& q = snap.q.bulk;
        const Vector& qg = snap.q.trace;
        const Vector& y = traj.snapshots[k].y.bulk;
        const Vector& ytr = traj.snapshots[k].y.trace;

        double bulk_term = 0.0;
        for (int i = 0; i < grid.num_nodes; ++i)
            bulk_term += grid.volume_weights(i) * (phi * pot.h.d2(y(i)) + pot.f2.d2(y(i))) * q(i);
        double bdry_term = 0.0;
        for (int j = 0; j < grid.num_boundary(); ++j)
            bdry_term += grid.boundary_weights(j) * (psi * pot.h.d2(ytr(j)) + pot.g2.d2(ytr(j))) *
                         qg(j);
        double data_term = 0.0;
        if (weights.beta1 != 0.0)
            data_term += weights.beta1 * grid.integrate(y - targets.z_q.row(k).transpose());
        if (weights.beta2 != 0.0)
            data_term += weights.beta2 *
                         grid.boundary_integrate(ytr - targets.z_sigma.row(k).transpose());

        double mean_k;
        if (k == steps) {
            mean_k = -(grid.boundary_integrate(qg) + dt * (bulk_term + bdry_term - data_term)) /
                     grid.volume;
        } else {
            const double ratio = c(k + 1) / c(k);
            mean_k = ratio * (mean_next + grid.boundary_integrate(qgam_next) / grid.volume) -
                     (grid.boundary_integrate(qg) + dt * (bulk_term + bdry_term - data_term)) /
                         grid.volume;
        }

        Vector zero_mean_part = neumann_inverse(grid, q);
        p[k - 1] = zero_mean_part.array() + mean_k;
        mean_next = mean_k;
        qgam_next = qg;
    }
    return p;
}

std::vector<double> adjoint_residual_continuous(const Grid& grid, const Potentials& pot,
                                                const AdjointTrajectory& adjoint,
                                                const StateTrajectory& traj,
                                                const Targets& targets,
                                                const CostWeights& weights, double alpha) {
    const int steps = adjoint.steps();
    const double dt = adjoint.dt;
    const auto [phi, psi] = pot.scaling.quench(alpha);
    std::vector<double> out;
    out.reserve(steps);

    // X = N(q) + q per slot; skip the solve when q vanishes.
    auto x_of = [&](const Vector& q) -> Vector {
        if (q.cwiseAbs().maxCoeff() == 0.0) return q;
        return neumann_inverse(grid, q) + q;
    };

    Vector x_next = x_of(adjoint.snapshots[steps].q.bulk);
    for (int j = steps - 1; j >= 0; --j) {
        const AdjointSnapshot& snap = adjoint.snapshots[j];
        const Vector& q = snap.q.bulk;
        const Vector& qg = snap.q.trace;
        const Vector x = x_of(q);
        const Vector& y = traj.snapshots[j].y.bulk;
        const Vector& ytr = traj.snapshots[j].y.trace;
        const Vector& qg_next = adjoint.snapshots[j + 1].q.trace;

        Vector r = grid.volume_weights.cwiseProduct(x - x_next) / dt;
        r += grid.stiffness * q;
        for (int i = 0; i < grid.num_nodes; ++i)
            r(i) += grid.volume_weights(i) *
                    ((phi * pot.h.d2(y(i)) + pot.f2.d2(y(i))) * q(i) -
                     weights.beta1 * (y(i) - targets.z_q(j, i)));

        Vector rb = grid.boundary_weights.cwiseProduct(qg - qg_next) / dt;
        rb += grid.boundary_stiffness * qg;
        for (int jj = 0; jj < grid.num_boundary(); ++jj)
            rb(jj) += grid.boundary_weights(jj) *
                      ((psi * pot.h.d2(ytr(jj)) + pot.g2.d2(ytr(jj))) * qg(jj) -
                       weights.beta2 * (ytr(jj) - targets.z_sigma(j, jj)));
        r += grid.lift_trace(rb);

        // The functional acts on zero-mean test pairs; remove the component
        // represented by constants, then measure in the mass-normalized norm.
        const double shift = r.sum() / grid.volume_weights.sum();
        r -= shift * grid.volume_weights;
        Vector mass = grid.volume_weights;
        for (int jj = 0; jj < grid.num_boundary(); ++jj)
            mass(grid.chain_nodes[jj]) += grid.boundary_weights(jj);
        out.push_back(std::sqrt(r.cwiseQuotient(mass).dot(r)));
        x_next = x;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

} // namespace quench
