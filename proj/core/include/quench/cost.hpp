#pragma once

#include "quench/geometry.hpp"

#include <array>

namespace quench {

/// Tracking weights beta_1..beta_5. The final-time weights beta_3, beta_4 are
/// accepted but must be zero (compatibility rule (A6) of the config schema).
struct CostWeights {
    double beta1 = 0.0;
    double beta2 = 0.0;
    double beta3 = 0.0;
    double beta4 = 0.0;
    double beta5 = 0.0;

    void validate() const;
};

/// Tracking targets on the space-time grids. z_q has one row per time node and
/// one column per bulk node; z_sigma one column per chain node. The final-time
/// targets z_omega / z_gamma are accepted in configs but unused while (A6)
/// forces beta_3 = beta_4 = 0.
struct Targets {
    Eigen::MatrixXd z_q;
    Eigen::MatrixXd z_sigma;
    Vector z_omega;
    Vector z_gamma;

    static Targets constant(const Grid& grid, int steps, double zq, double zsigma);
    void check_shapes(const Grid& grid, int steps) const;
};

/// Trapezoidal quadrature weights over the uniform time grid t_0..t_K.
Vector time_quadrature(int steps, double dt);

/// L2(Sigma) inner product of two boundary space-time fields (trapezoid in
/// time, boundary measure in space).
double sigma_inner(const Grid& grid, double dt, const BoundaryField& a, const BoundaryField& b);

inline double sigma_norm(const Grid& grid, double dt, const BoundaryField& a) {
    double s = sigma_inner(grid, dt, a, a);
    return s > 0.0 ? std::sqrt(s) : 0.0;
}

} // namespace quench
