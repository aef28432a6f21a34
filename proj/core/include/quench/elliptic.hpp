#pragma once

#include "quench/geometry.hpp"

#include <memory>

namespace quench {

struct SolveOptions {
    double tol = 1e-10;   // relative residual target
    int max_iter = 0;     // 0: choose from problem size
    bool deflate_constants = false; // semidefinite system with kernel = constants
};

/// Preconditioned (Jacobi) conjugate gradients for symmetric positive
/// (semi)definite systems. With `deflate_constants` the right-hand side must
/// be consistent (orthogonal to constants); an inconsistent rhs is rejected.
/// Throws SolveError with the residual history on non-convergence.
Vector solve_spd(const SparseMatrix& A, const Vector& rhs, const SolveOptions& opts = {});

/// Dense factorization path for systems below 5000 unknowns; serves as an
/// internal oracle for solve_spd. Same contract.
Vector solve_spd_dense(const SparseMatrix& A, const Vector& rhs, const SolveOptions& opts = {});

/// Bulk field with (volume-weighted) mean zero. The constructor validates
/// |mean| <= 1e-10 * max(1, max|field|).
struct ZeroMeanField {
    Vector values;
    ZeroMeanField(const Grid& grid, Vector field);
};

/// Inverse Neumann operator: u with -Lap u = v (zero flux), mean(u) = 0.
/// Rejects data with nonzero mean (system singular on constants).
Vector neumann_inverse(const Grid& grid, const Vector& v, double tol = 1e-12);

inline Vector neumann_inverse(const Grid& grid, const ZeroMeanField& v, double tol = 1e-12) {
    return neumann_inverse(grid, v.values, tol);
}

/// Dual norm: sqrt(|grad N(v - mean v)|^2 + |mean v|^2). Nonnegative, zero
/// iff v vanishes.
double dual_norm(const Grid& grid, const Vector& v);

/// Deterministic sparse LU wrapper used by the implicit time steppers (the
/// coupled Newton systems are not symmetric).
class SparseLu {
public:
    void factorize(const SparseMatrix& A);
    Vector solve(const Vector& rhs) const;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

} // namespace quench
