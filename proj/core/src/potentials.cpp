#include "quench/potentials.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace quench {

PotentialEval LogPotential::eval(double y) const {
    if (!(std::abs(y) < 1.0))
        throw std::domain_error("LogPotential: argument " + std::to_string(y) +
                                " outside (-1,1)");
    PotentialEval e;
    // log1p keeps the (1 -+ y) ln(1 -+ y) factors accurate near the obstacle.
    const double lp = std::log1p(y);
    const double lm = std::log1p(-y);
    e.value = c_hat * ((1.0 + y) * lp + (1.0 - y) * lm);
    e.d1 = c_hat * (lp - lm);
    e.d2 = c_hat * 2.0 / ((1.0 - y) * (1.0 + y));
    return e;
}

double LogPotential::d1(double y) const { return eval(y).d1; }
double LogPotential::d2(double y) const { return eval(y).d2; }

PotentialEval SmoothPotential::eval(double y) const {
    PotentialEval e;
    // Horner for value, first and second derivative in one sweep.
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
        e.d2 = e.d2 * y + 2.0 * e.d1;
        e.d1 = e.d1 * y + e.value;
        e.value = e.value * y + *it;
    }
    return e;
}

void QuenchScaling::validate() const {
    if (!(p_phi > 0.0) || !(p_psi > 0.0))
        throw std::invalid_argument("QuenchScaling: exponents must be positive");
    if (!(c_phipsi > 0.0))
        throw std::invalid_argument("QuenchScaling: c_phipsi must be positive");
    for (int k = 0; k <= 40; ++k) {
        const double alpha = std::pow(2.0, -0.5 * k);
        const double phi = std::pow(alpha, p_phi);
        const double psi = std::pow(alpha, p_psi);
        if (phi > c_phipsi * psi * (1.0 + 1e-12))
            throw std::invalid_argument(
                "QuenchScaling: phi(alpha) <= c_phipsi * psi(alpha) fails at alpha = " +
                std::to_string(alpha));
    }
}

std::pair<double, double> QuenchScaling::quench(double alpha) const {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw std::invalid_argument("QuenchScaling: alpha must lie in (0,1], got " +
                                    std::to_string(alpha));
    return {std::pow(alpha, p_phi), std::pow(alpha, p_psi)};
}

} // namespace quench
