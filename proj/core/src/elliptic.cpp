#include "quench/elliptic.hpp"

#include "quench/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <cmath>
#include <memory>

namespace quench {

namespace {

double consistency_defect(const Vector& rhs) {
    // Kernel of a symmetric zero-flux stiffness matrix is spanned by 1, so a
    // consistent rhs must be l2-orthogonal to constants.
    return std::abs(rhs.sum()) / std::sqrt(static_cast<double>(rhs.size()));
}

void check_consistency(const Vector& rhs) {
    const double norm = rhs.norm();
    if (norm > 0.0 && consistency_defect(rhs) > 1e-8 * norm)
        throw std::invalid_argument(
            "solve_spd: rhs not orthogonal to the constant kernel (inconsistent system)");
}

void project_constants(Vector& v) {
    v.array() -= v.mean();
}

} // namespace

Vector solve_spd(const SparseMatrix& A, const Vector& rhs, const SolveOptions& opts) {
    const Eigen::Index n = A.rows();
    if (rhs.size() != n) throw std::invalid_argument("solve_spd: rhs size mismatch");

    Vector b = rhs;
    if (opts.deflate_constants) {
        check_consistency(b);
        project_constants(b);
    }

    const double bnorm = b.norm();
    if (bnorm == 0.0) return Vector::Zero(n);

    Vector diag = A.diagonal();
    for (Eigen::Index i = 0; i < n; ++i)
        if (diag(i) <= 0.0) diag(i) = 1.0;

    Vector x = Vector::Zero(n);
    Vector r = b;
    Vector z = r.cwiseQuotient(diag);
    if (opts.deflate_constants) project_constants(z);
    Vector p = z;
    double rz = r.dot(z);

    const int cap = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(4 * n + 100);
    std::vector<double> history;
    history.reserve(64);

    for (int it = 0; it < cap; ++it) {
        Vector Ap = A * p;
        const double pAp = p.dot(Ap);
        if (pAp <= 0.0) {
            throw SolveError("solve_spd: operator not positive on search direction", history);
        }
        const double alpha = rz / pAp;
        x += alpha * p;
        r -= alpha * Ap;
        const double res = r.norm() / bnorm;
        history.push_back(res);
        if (res <= opts.tol) {
            if (opts.deflate_constants) project_constants(x);
            return x;
        }
        z = r.cwiseQuotient(diag);
        if (opts.deflate_constants) project_constants(z);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    throw SolveError("solve_spd: no convergence after " + std::to_string(cap) +
                         " iterations (achieved relative residual " +
                         std::to_string(history.back()) + ")",
                     history);
}

Vector solve_spd_dense(const SparseMatrix& A, const Vector& rhs, const SolveOptions& opts) {
    const Eigen::Index n = A.rows();
    if (n >= 5000)
        throw std::invalid_argument("solve_spd_dense: oracle path limited to n < 5000");
    if (rhs.size() != n) throw std::invalid_argument("solve_spd_dense: rhs size mismatch");

    if (!opts.deflate_constants) {
        Eigen::MatrixXd dense = Eigen::MatrixXd(A);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(dense);
        return ldlt.solve(rhs);
    }

    check_consistency(rhs);
    // Bordered system pins the mean: [A 1; 1' 0][x; mu] = [rhs; 0].
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n + 1, n + 1);
    dense.topLeftCorner(n, n) = Eigen::MatrixXd(A);
    dense.topRightCorner(n, 1).setOnes();
    dense.bottomLeftCorner(1, n).setOnes();
    Vector b(n + 1);
    b.head(n) = rhs;
    b(n) = 0.0;
    Vector sol = dense.partialPivLu().solve(b);
    Vector x = sol.head(n);
    project_constants(x);
    return x;
}

ZeroMeanField::ZeroMeanField(const Grid& grid, Vector field) {
    const double mean = grid.mean_value(field);
    const double scale = std::max(1.0, field.size() ? field.cwiseAbs().maxCoeff() : 0.0);
    if (std::abs(mean) > 1e-10 * scale)
        throw std::invalid_argument("ZeroMeanField: mean " + std::to_string(mean) +
                                    " exceeds tolerance");
    values = std::move(field);
}

Vector neumann_inverse(const Grid& grid, const Vector& v, double tol) {
    if (v.size() != grid.num_nodes)
        throw std::invalid_argument("neumann_inverse: field size mismatch");
    const double mean = grid.mean_value(v);
    const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
    if (std::abs(mean) > 1e-10 * scale)
        throw std::invalid_argument("neumann_inverse: data has nonzero mean " +
                                    std::to_string(mean));

    // Solve A u = W (v - mean) on the zero-mean subspace, then shift to
    // volume-weighted mean zero.
    Vector rhs = grid.volume_weights.cwiseProduct(v);
    rhs.array() -= rhs.sum() / grid.num_nodes; // exact l2-consistency for CG

    SolveOptions opts;
    opts.tol = tol;
    opts.deflate_constants = true;
    Vector u = solve_spd(grid.stiffness, rhs, opts);
    u.array() -= grid.mean_value(u);
    return u;
}

double dual_norm(const Grid& grid, const Vector& v) {
    if (v.size() != grid.num_nodes)
        throw std::invalid_argument("dual_norm: field size mismatch");
    const double mean = grid.mean_value(v);
    Vector centered = v;
    centered.array() -= mean;
    if (centered.cwiseAbs().maxCoeff() == 0.0) return std::abs(mean);
    Vector u = neumann_inverse(grid, centered);
    return std::sqrt(grid.dirichlet_form(u, u) + mean * mean);
}

struct SparseLu::Impl {
    Eigen::SparseLU<SparseMatrix> lu;
};

void SparseLu::factorize(const SparseMatrix& A) {
    impl_ = std::make_shared<Impl>();
    impl_->lu.compute(A);
    if (impl_->lu.info() != Eigen::Success)
        throw SolveError("SparseLu: factorization failed (singular system?)");
}

Vector SparseLu::solve(const Vector& rhs) const {
    if (!impl_) throw std::logic_error("SparseLu: solve before factorize");
    Vector x = impl_->lu.solve(rhs);
    if (impl_->lu.info() != Eigen::Success)
        throw SolveError("SparseLu: solve failed");
    return x;
}

} // namespace quench
