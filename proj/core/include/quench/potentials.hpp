#pragma once

#include <vector>

namespace quench {

/// Value and first two derivatives of a scalar potential at a point.
struct PotentialEval {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// Logarithmic potential c_hat * ((1+y) ln(1+y) + (1-y) ln(1-y)) on (-1,1).
/// Evaluation outside the open interval raises std::domain_error; callers are
/// expected to keep iterates strictly interior.
struct LogPotential {
    double c_hat = 1.0;

    PotentialEval eval(double y) const;
    double value(double y) const { return eval(y).value; }
    double d1(double y) const;
    double d2(double y) const;
};

/// Smooth polynomial part of the free energy (coefficients in ascending
/// order). Defaults to (1 - y^2)/2.
struct SmoothPotential {
    std::vector<double> coeffs{0.5, 0.0, -0.5};

    PotentialEval eval(double y) const;
    double d1(double y) const { return eval(y).d1; }
    double d2(double y) const { return eval(y).d2; }
};

/// Barrier scalings phi(alpha) = alpha^p_phi and psi(alpha) = alpha^p_psi,
/// constrained by phi <= c_phipsi * psi on (0,1] (checked on a sample grid at
/// construction via validate()).
struct QuenchScaling {
    double p_phi = 1.0;
    double p_psi = 1.0;
    double c_phipsi = 1.0;

    void validate() const;
    /// Returns (phi(alpha), psi(alpha)); rejects alpha outside (0,1].
    std::pair<double, double> quench(double alpha) const;
    double phi(double alpha) const { return quench(alpha).first; }
    double psi(double alpha) const { return quench(alpha).second; }
};

/// Bundle used by the solvers: logarithmic part, smooth bulk/surface parts,
/// and the barrier scaling.
struct Potentials {
    LogPotential h;
    SmoothPotential f2;
    SmoothPotential g2;
    QuenchScaling scaling;
};

} // namespace quench
