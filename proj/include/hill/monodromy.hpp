#pragma once

#include <span>
#include <vector>

#include "hill/ode_rk.hpp"
#include "hill/potential.hpp"

namespace hill {

/// Fundamental data of  -y'' + q y = lambda y  on [0, 1]:
/// theta is the solution with theta(0) = 1, theta'(0) = 0 and phi the one
/// with phi(0) = 0, phi'(0) = 1.  The monodromy matrix is
/// [[theta1, phi1], [dtheta1, dphi1]] and the discriminant is
/// F = theta1 + dphi1; eigenvalues of the boundary problem with
/// y(1) = e^{it} y(0), y'(1) = e^{it} y'(0) are the roots of F = 2 cos t.
struct MonodromyData {
    cplx lambda;
    cplx theta1, dtheta1;   // theta(1), theta'(1)
    cplx phi1, dphi1;       // phi(1),   phi'(1)
    cplx F;                 // theta1 + dphi1
    cplx dF = 0.0;          // dF/dlambda        (jet >= 1)
    cplx d2F = 0.0;         // d2F/dlambda^2     (jet >= 2)
    int jet = 1;
    /// |theta1*dphi1 - dtheta1*phi1 - 1| scaled by the product magnitude;
    /// the monodromy matrix has determinant 1 for the exact flow.
    double wronskian_defect = 0.0;
};

/// Samples of the fundamental pair on an x-grid (no lambda derivatives).
struct SolutionTrace {
    cplx lambda;
    std::vector<double> grid;
    std::vector<cplx> theta, dtheta, phi, dphi;
};

/// Integrate the fundamental pair (and jet lambda-derivative levels of it)
/// jointly across one period.  jet = 0 gives F only, jet = 1 adds dF
/// (the default contract), jet = 2 adds d2F.  Throws NonFiniteInput for a
/// non-finite lambda and IntegratorFailure when step control collapses.
MonodromyData fundamental_at_one(const FourierPotential& p, cplx lambda,
                                 double tol = 1e-10, int jet = 1);

/// Dense samples of theta, phi, theta', phi' on a strictly increasing grid
/// contained in [0, 1].  The endpoint values are consistent with
/// fundamental_at_one at the same tolerance.
SolutionTrace fundamental_on_grid(const FourierPotential& p, cplx lambda,
                                  std::span<const double> grid, double tol = 1e-10);

/// Hill discriminant F(lambda); entire in lambda.  For q = 0 it equals
/// 2 cos(sqrt(lambda)).
cplx discriminant(const FourierPotential& p, cplx lambda, double tol = 1e-10);

/// dF/dlambda computed from the variational system (not finite differences).
cplx discriminant_derivative(const FourierPotential& p, cplx lambda, double tol = 1e-10);

} // namespace hill
