#include "quench/cost.hpp"

#include "quench/errors.hpp"

namespace quench {

void CostWeights::validate() const {
    const double betas[5] = {beta1, beta2, beta3, beta4, beta5};
    double sum = 0.0;
    for (double b : betas) {
        if (b < 0.0) throw ConfigError("cost weights must be nonnegative, violates (A1)");
        sum += b;
    }
    if (sum == 0.0) throw ConfigError("cost weights must not all vanish, violates (A1)");
    if (beta3 != 0.0 || beta4 != 0.0)
        throw ConfigError("final-time weights beta3/beta4 must be zero, violates (A6)");
}

Targets Targets::constant(const Grid& grid, int steps, double zq, double zsigma) {
    Targets t;
    t.z_q = Eigen::MatrixXd::Constant(steps + 1, grid.num_nodes, zq);
    t.z_sigma = Eigen::MatrixXd::Constant(steps + 1, grid.num_boundary(), zsigma);
    return t;
}

void Targets::check_shapes(const Grid& grid, int steps) const {
    if (z_q.rows() != steps + 1 || z_q.cols() != grid.num_nodes)
        throw std::invalid_argument("Targets: z_q shape mismatch");
    if (z_sigma.rows() != steps + 1 || z_sigma.cols() != grid.num_boundary())
        throw std::invalid_argument("Targets: z_sigma shape mismatch");
}

Vector time_quadrature(int steps, double dt) {
    Vector c = Vector::Constant(steps + 1, dt);
    c(0) = 0.5 * dt;
    c(steps) = 0.5 * dt;
    return c;
}

double sigma_inner(const Grid& grid, double dt, const BoundaryField& a, const BoundaryField& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("sigma_inner: shape mismatch");
    if (a.cols() != grid.num_boundary())
        throw std::invalid_argument("sigma_inner: boundary size mismatch");
    const Vector c = time_quadrature(static_cast<int>(a.rows()) - 1, dt);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < a.rows(); ++k) {
        double row = 0.0;
        for (int j = 0; j < grid.num_boundary(); ++j)
            row += grid.boundary_weights(j) * a(k, j) * b(k, j);
        sum += c(k) * row;
    }
    return sum;
}

} // namespace quench
