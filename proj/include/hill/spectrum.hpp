#pragma once

#include <string>
#include <vector>

#include "hill/monodromy.hpp"
#include "hill/potential.hpp"

namespace hill {

/// One eigenvalue of the fiber operator with quasimomentum t: a root of
/// F(lambda) = 2 cos t, carrying its band index and the algebraic
/// multiplicity of the root.  By definition the fibers at -t and t share
/// their eigenvalues, so lambda_n(-t) = lambda_n(t) bitwise.
struct BlochEigenvalue {
    int n = 0;              // band index
    double t = 0.0;         // quasimomentum in (-pi, pi]
    cplx lambda;            // root of F(lambda) - 2 cos t
    int multiplicity = 1;   // order of the root
};

/// The n-th band curve: samples of lambda_n(t) over a uniform t-grid on
/// [0, pi].  The spectrum of the full-line operator is the union of these
/// curves over all n.
struct SpectralCurve {
    int n = 0;
    std::vector<BlochEigenvalue> samples;
    bool closed = true;     // endpoints t = 0 and t = pi are included
    bool suspect = false;   // a continuation step was ambiguous or forced
    std::vector<std::string> notes;
};

struct TrackingConfig {
    int nmax = 10;              // compute bands |n| <= nmax
    int tgrid = 256;            // number of t samples on [0, pi], >= 16
    double rho = 1.0 / (16.0 * PI);   // edge-zone half-width; needs 15*pi*rho < 1
    double newton_tol = 1e-10;  // residual bound |F(lambda) - 2 cos t|
    int newton_maxiter = 40;
    double ode_tol = 1e-12;     // integrator tolerance inside refinements
    double membership_tol = 1e-6;
    int workers = 0;            // 0 = library default thread count
};

/// Validate invariants (tgrid >= 16, 15*pi*rho < 1, positive tolerances);
/// throws BadConfig.
void validate(const TrackingConfig& cfg);

/// Per-index refinement failure, reported instead of thrown when a failure
/// sink is supplied to eigenvalues_at.
struct IndexFailure {
    int n = 0;
    std::string what;
};

/// All fiber eigenvalues lambda_n(t) for |n| <= cfg.nmax at one t in
/// (-pi, pi]: Newton-refined roots of F(lambda) = 2 cos t, seeded from the
/// truncated fiber matrix for small |n| and from (2 pi n + t)^2 for large
/// |n|.  Roots that coincide within max(1e-8, 4e-13 (1+|lambda|)) are merged
/// and the multiplicity incremented; a merge without smallness of F' is a
/// SeedCollision.  Negative t is computed at |t| and relabeled, making the
/// two fibers bitwise equal.  When `failures` is non-null, per-index Newton
/// divergences are appended there and the run continues; otherwise
/// NewtonDivergence is thrown.
std::vector<BlochEigenvalue> eigenvalues_at(const FourierPotential& p, double t,
                                            const TrackingConfig& cfg = {},
                                            std::vector<IndexFailure>* failures = nullptr);

/// Single band value lambda_n(t): the eigenvalues_at machinery reduced to
/// one index.
BlochEigenvalue bloch_eigenvalue(const FourierPotential& p, int n, double t,
                                 const TrackingConfig& cfg = {});

/// Track all band curves over the uniform t-grid by continuation from an
/// anchor fiber near t = pi/2: each step predicts lambda by its t-derivative
/// (dlambda/dt = -2 sin t / F'(lambda)) and Newton-corrects; rejected steps
/// are bisected in t up to 6 levels.  Near the edge zones [0, rho] and
/// [pi - rho, pi], curve pairs whose values both lie inside the pairing disk
/// |lambda - (2 pi n + t)^2| <= 15 pi n rho are labeled by ascending real
/// part: (-n, +n) at the left edge and (n, -(n+1)) at the right edge.
/// Ambiguous matches mark the affected curves suspect instead of throwing.
std::vector<SpectralCurve> track_bands(const FourierPotential& p,
                                       const TrackingConfig& cfg = {});

enum class Membership { IN, OUT, UNCERTAIN };

/// Spectrum membership test for the full-line operator via the discriminant
/// criterion: lambda is in the spectrum iff F(lambda) is real with
/// |F| <= 2.  IN requires |Im F| < tol and |Re F| <= 2 - tol; OUT requires
/// |Im F| > tol or |Re F| > 2 + tol; anything else is UNCERTAIN.
Membership spectrum_membership(const FourierPotential& p, cplx lambda,
                               const TrackingConfig& cfg = {});

/// Threshold below which |F'(lambda)| is treated as vanishing when deciding
/// root multiplicity; scaled by the natural size of F' at that lambda.
double multiple_root_tolerance(cplx lambda);

/// Seed-regime boundary: indices |n| <= seed_threshold(p) are seeded from
/// the fiber matrix, larger ones from the symbol (2 pi n + t)^2.
int seed_threshold(const FourierPotential& p);

/// Newton/Schroeder refinement of a root of F(lambda) = rhs starting from
/// `seed`.  Returns the refined root along with the discriminant jet at the
/// final iterate; `converged` reflects the residual bound.  Exposed for the
/// diagnostics and expansion modules, which refine against shifted
/// right-hand sides.
struct RootRefinement {
    cplx lambda;
    cplx F, dF, d2F;
    bool converged = false;
    int iterations = 0;
    int multiplicity = 1;
};
RootRefinement refine_discriminant_root(const FourierPotential& p, cplx seed, cplx rhs,
                                        double tol = 1e-10, int maxiter = 40,
                                        double ode_tol = 1e-12);

} // namespace hill
