#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hill/monodromy.hpp"
#include "hill/potential.hpp"
#include "hill/spectrum.hpp"

namespace hill {

/// The two Floquet solutions of  -y'' + q y = lambda y  at a point where
/// F(lambda) = 2 cos t:
///
///   Phi_pm(x) = theta(x) + c_pm phi(x),   c_pm = (e^{+-it} - theta(1)) / phi(1),
///
/// normalized by Phi_pm(0) = 1 and satisfying Phi_pm(x+1) = e^{+-it} Phi_pm(x).
/// The construction degenerates when phi(1, lambda) vanishes (lambda is a
/// Dirichlet eigenvalue), which is reported instead of divided through.
struct FloquetPair {
    cplx lambda;
    double t = 0.0;
    std::vector<double> x;               ///< sample grid spanning [0, 1]
    std::vector<cplx> plus, dplus;       ///< Phi_+ and its x-derivative
    std::vector<cplx> minus, dminus;     ///< Phi_- and its x-derivative
    cplx c_plus, c_minus;                ///< coefficients of phi in Phi_pm
    cplx theta1, dtheta1, phi1, dphi1;   ///< monodromy entries at lambda
    SolutionTrace trace;                 ///< underlying fundamental-pair samples
};

/// Unit-normalized eigenfunction of the quasi-periodic problem at the band
/// eigenvalue lambda_n(t), the matching eigenfunction of the adjoint problem
/// (same boundary condition, conjugated potential), and the inner product
/// alpha between them.  The Riesz projection onto the eigenspace has norm
/// |alpha|^{-1}; alpha -> 0 signals an approaching spectral singularity.
struct FloquetRecord {
    int n = 0;
    double t = 0.0;
    cplx lambda;
    std::vector<double> x;        ///< uniform grid on [0, 1] (x.size() == M + 1)
    std::vector<cplx> psi;        ///< unit eigenfunction, psi(x+1) = e^{it} psi(x)
    std::vector<cplx> psi_star;   ///< unit adjoint eigenfunction, same multiplier
    cplx alpha;                   ///< (psi, psi_star) over one period
    double proj_norm = 1.0;       ///< |alpha|^{-1}
};

/// One sample of an alpha(t) profile; `ok` is false where the eigenvalue is
/// multiple and alpha is undefined (the note carries the reason).
struct AlphaSample {
    double t = 0.0;
    cplx alpha;
    bool ok = false;
    std::string note;
};

/// Leading Fourier data of an eigenfunction: the coefficients
/// u_k = (psi, e^{i(2 pi k + t) x}) for k in {-(n+1), -n, n, n+1} and the
/// squared L2 mass left outside those head modes.
struct TailProfile {
    std::vector<std::pair<int, cplx>> head;
    double tail_mass = 0.0;
};

/// Threshold on |phi(1, lambda)| below which the Floquet formula is treated
/// as degenerate; scaled like the natural size 1/sqrt(|lambda|) of phi(1).
double dirichlet_degeneracy_tol(cplx lambda);

/// Build both Floquet solutions on `grid`, which must start at 0, end at 1,
/// and be strictly increasing.  Requires |F(lambda) - 2 cos t| to be small
/// (throws NotAnEigenvalue otherwise) and |phi(1, lambda)| above the
/// degeneracy threshold (throws DirichletDegeneracy otherwise).
FloquetPair floquet_solutions(const FourierPotential& p, cplx lambda, double t,
                              std::span<const double> grid, double ode_tol = 1e-12);

/// Maximum relative defect of the quasi-periodic extension: the solution
/// continued past x = 1 by the differential equation is compared against the
/// multiplier extension e^{+-it} Phi_pm(x) across the sample grid.
double quasiperiodicity_defect(const FloquetPair& fp, bool plus_branch);

/// Eigenfunction pair and alpha at the simple band eigenvalue lambda_n(t).
/// Uses the Floquet formula away from Dirichlet degeneracy and falls back to
/// the fiber-matrix eigenvector route near it.  Throws MultipleEigenvalue
/// when lambda_n(t) is not simple.
FloquetRecord eigenfunction_pair(const FourierPotential& p, int n, double t,
                                 const TrackingConfig& cfg = {}, int samples = 512);

/// The reciprocal basis element chi = psi_star / conj(alpha), normalized so
/// that (psi, chi) = 1.
std::vector<cplx> reciprocal_eigenfunction(const FloquetRecord& rec);

/// alpha_n(t) sampled on the interior midpoint grid t_j = (j + 1/2) pi / tgrid,
/// j = 0 .. tgrid-1.  Points where the eigenvalue is multiple are marked
/// rather than thrown.
std::vector<AlphaSample> alpha_profile(const FourierPotential& p, int n, int tgrid,
                                       const TrackingConfig& cfg = {}, int samples = 256);

/// sup over the arc t in [t_lo, t_hi] of the projection norm |alpha_n(t)|^{-1},
/// computed on `samples` nodes with three local refinement passes around the
/// maximizer.  Throws IrregularArc when a sampled eigenvalue is multiple.
double projection_norm_arc(const FourierPotential& p, int n, double t_lo, double t_hi,
                           const TrackingConfig& cfg = {}, int samples = 33);

/// Relative discrepancy in the identity connecting the lambda-derivative of
/// the discriminant to the Floquet solutions at a simple band eigenvalue:
///
///   dF/dlambda = -phi(1, lambda) * integral_0^1 Phi_+(x) Phi_-(x) dx.
///
/// Returns |lhs - rhs| / max(|lhs|, |rhs|); both sides are computed
/// independently (variational system vs. quadrature of the solutions).
double discriminant_identity_error(const FourierPotential& p, int n, double t,
                                   const TrackingConfig& cfg = {}, int samples = 512);

/// Head Fourier coefficients and remaining tail mass of rec.psi.
TailProfile fourier_tail_profile(const FloquetRecord& rec);

} // namespace hill
