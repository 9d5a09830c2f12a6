#pragma once

#include <string>
#include <vector>

#include "hill/potential.hpp"
#include "hill/spectrum.hpp"

namespace hill {

/// Classification of a critical point of the discriminant that lies on (or
/// within tolerance of) the spectrum:
///  - InteriorMultiple: matched to t strictly inside (0, pi); a multiple
///    eigenvalue of the quasi-periodic problem there is a spectral
///    singularity.
///  - EndpointJordan: matched to t in {0, pi} with a one-dimensional
///    eigenspace (an associated function exists), hence a singularity.
///  - EndpointSemisimple: matched to t in {0, pi} with two independent
///    eigenfunctions (both phi(1) and theta'(1) vanish); not a singularity.
enum class SingularityKind { InteriorMultiple, EndpointJordan, EndpointSemisimple };

struct SingularityCandidate {
    cplx lambda;                 ///< critical point of F on the spectrum
    double t = 0.0;              ///< matched quasimomentum, arccos(F/2) in [0, pi]
    SingularityKind kind = SingularityKind::EndpointSemisimple;
    double F_residual = 0.0;     ///< |Im F| + max(0, |Re F| - 2): distance to the band range
    double Fprime_residual = 0.0;    ///< |F'(lambda)| after refinement
    std::vector<int> bands;      ///< tracked band labels passing through lambda
};

struct SingularityReport {
    std::vector<SingularityCandidate> candidates;   ///< sorted by (Re, Im) of lambda
    std::vector<int> S;          ///< sorted band labels whose curve carries a singularity
    std::vector<double> exclusion_t;   ///< interior critical t values in (0, pi), sorted
    int s = 0;                   ///< number of singular points found
    int m = 0;                   ///< number of interior critical points found
    std::vector<std::string> log;    ///< per-seed refinement failures (non-fatal)
};

/// Threshold below which |phi(1, lambda)| and |theta'(1, lambda)| are both
/// treated as vanishing when testing the endpoint eigenspace dimension.
double endpoint_degeneracy_tol(cplx lambda);

/// Threshold on |F'(lambda)| below which a refined critical point is accepted.
double critical_point_tolerance(cplx lambda);

/// Locate and classify the critical points of the discriminant along the
/// tracked bands |n| <= cfg.nmax.  Seeds come from local minima of |F'| along
/// each band curve (plus both endpoint nodes); each seed is refined by Newton
/// on F', filtered by membership of the spectrum, matched to its t, and
/// classified.  Refinement failures are logged, not thrown.
SingularityReport find_singularities(const FourierPotential& p, const TrackingConfig& cfg = {});

/// Same search driven by externally supplied band curves (e.g. loaded from a
/// saved tracking run).  The curves must cover t in [0, pi] with cfg.tgrid
/// uniform samples per band, as produced by track_bands with the same config.
SingularityReport find_singularities(const FourierPotential& p,
                                     const std::vector<SpectralCurve>& curves,
                                     const TrackingConfig& cfg = {});

/// Algebraic and geometric multiplicity of an eigenvalue lambda of the
/// quasi-periodic problem at t.  Algebraic multiplicity is the order of
/// lambda as a root of F - 2 cos t, resolved up to 3 (3 means "at least
/// triple, not further resolved").  The geometric multiplicity can exceed 1
/// only at t in {0, pi}, where it is 2 exactly when phi(1) and theta'(1)
/// both vanish.  Throws NotAnEigenvalue if F(lambda) != 2 cos t.
struct MultiplicityInfo {
    int algebraic = 1;
    int geometric = 1;
};
MultiplicityInfo multiplicity_at(const FourierPotential& p, cplx lambda, double t,
                                 double ode_tol = 1e-12);

enum class Verdict { Consistent, Inconsistent, Inconclusive };

/// Finite-range evaluation of the asymptotic-spectrality criteria over the
/// computed window N_used < |n| <= nmax:
///  - tail_singularity_free: no singularity matched to those bands;
///  - interior_simple: no multiple eigenvalue at sampled interior t;
///  - endpoint_semisimple: no Jordan structure at t in {0, pi};
///  - proj_norm_bounded: measured sup of |alpha_n(t)|^{-1} with no growth
///    trend toward the edge of the computed band range.
/// `overall` is Inconsistent on a finite witness (a found singular point on
/// any band, a multiple eigenvalue, a Jordan block), Inconclusive when the
/// only concern is an edge-growth trend, and otherwise Consistent — it is
/// never a proof, only finite-range consistency.
struct SpectralityDiagnostic {
    int N_used = 0;
    bool tail_singularity_free = true;
    bool interior_simple = true;
    bool endpoint_semisimple = true;
    bool proj_norm_bounded = true;
    double sup_proj_norm = 1.0;      ///< measured sup over the sampled lattice
    double bound_d = 1.0;            ///< reported bound (the measured sup)
    bool edge_growth = false;        ///< sup attained at |n| = nmax with a rising trend
    Verdict overall = Verdict::Consistent;
    std::vector<std::string> notes;
};
SpectralityDiagnostic spectrality_diagnostic(const FourierPotential& p,
                                             const TrackingConfig& cfg = {});

/// Verdicts for the arithmetic coefficient conditions.
enum class ConditionVerdict { Holds, Fails, Borderline };

/// Result of the phase condition for the single-harmonic-pair potential
/// q = a e^{-i 2 pi x} + b e^{i 2 pi x}: with alpha = arg(ab)/pi, the
/// quantity inf over natural q, p of |q alpha - (2p - 1)| must stay positive.
/// The brute-force search reports the minimum over 1 <= q <= Q for both the
/// primary form |q alpha - (2p-1)| and the doubled form |2 q alpha - (2p-1)|
/// used for the cosine convention.  A "holds" verdict requires the rational
/// certificate: alpha = num/den in lowest terms with num even or num <= 0,
/// in which case the infimum is provably positive.  Without a certificate
/// and without a witness the verdict is Borderline (for irrational alpha the
/// infimum vanishes in exact arithmetic, but only in the limit, so a finite
/// scan can neither confirm nor refute).
struct PhaseConditionResult {
    ConditionVerdict verdict = ConditionVerdict::Borderline;
    double alpha = 0.0;            ///< arg(ab)/pi in (-1, 1]
    double min_primary = 0.0;      ///< min over q <= Q of |q alpha - (2p-1)|
    long long q_primary = 0, p_primary = 0;   ///< argmin witness
    double min_doubled = 0.0;      ///< min over q <= Q of |2 q alpha - (2p-1)|
    long long q_doubled = 0, p_doubled = 0;
    bool certificate = false;      ///< even-numerator (or non-positive) rational certificate
    long long cert_num = 0, cert_den = 0;
    std::string note;
};
PhaseConditionResult phase_condition_check(cplx a, cplx b, long long Q = 10000);

/// Parameters of the general coefficient condition: smoothness exponent s,
/// lower-bound constant c, imaginary-part fraction eps, and the cap on the
/// two-sided ratio |q_n / q_-n|.
struct CoefficientConditionParams {
    int s = 0;
    double c = 0.5;
    double eps = 0.1;
    double ratio_cap = 10.0;
};

struct CoefficientConditionRow {
    int n = 0;
    double ratio = 0.0;        ///< max(|q_n / q_-n|, |q_-n / q_n|)
    double lower = 0.0;        ///< c * n^{-s-1}
    double abs_qn = 0.0;
    cplx product;              ///< q_n * q_-n
    bool ratio_ok = false;     ///< ratio <= ratio_cap
    bool size_ok = false;      ///< |q_n| > lower
    bool sign_ok = false;      ///< Re(product) >= 0 or |Im(product)| >= eps |product|
};

struct CoefficientConditionResult {
    bool holds = false;
    int first_violation = 0;   ///< 0 when holds
    std::vector<CoefficientConditionRow> rows;
};

/// Evaluate the coefficient condition for every n in nrange (n >= 1): the
/// pair q_n, q_{-n} must be comparable in size (ratio bounded), bounded
/// below by c n^{-s-1}, and the product q_n q_{-n} must avoid the negative
/// real axis sector (nonnegative real part, or an imaginary part of at
/// least the fraction eps of its modulus).
/// Throws ZeroCoefficient when q_n or q_{-n} vanishes for some requested n.
CoefficientConditionResult coefficient_condition_check(const FourierPotential& p,
                                                       const CoefficientConditionParams& prm,
                                                       const std::vector<int>& nrange);

} // namespace hill
