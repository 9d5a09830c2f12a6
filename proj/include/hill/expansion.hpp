#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hill/diagnostics.hpp"
#include "hill/potential.hpp"
#include "hill/spectrum.hpp"
#include "hill/types.hpp"

namespace hill {

/// A compactly supported function on the line: the unit of input for the
/// expansion machinery.  Evaluation returns 0 outside [lo, hi].
class TestFunction {
  public:
    TestFunction() = default;
    TestFunction(double lo, double hi, std::function<cplx(double)> eval);

    /// Smooth compactly supported bump: exp(1 - 1/(1 - u^2)) on (lo, hi)
    /// with u the affine map of (lo, hi) onto (-1, 1), scaled by amplitude;
    /// identically zero outside.  C-infinity on the whole line.
    static TestFunction bump(double lo, double hi, cplx amplitude = 1.0);

    /// bump(lo, hi) modulated by e^{i freq x}.
    static TestFunction modulated_bump(double lo, double hi, double freq,
                                       cplx amplitude = 1.0);

    /// Natural cubic-spline interpolant of (x, v) samples, supported on
    /// [x.front(), x.back()].  x must be strictly increasing with >= 4
    /// entries (TooFewSamples otherwise); non-finite data throws
    /// NonFiniteInput.
    static TestFunction from_samples(std::vector<double> x, std::vector<cplx> v);

    cplx operator()(double x) const;
    double lo() const { return lo_; }
    double hi() const { return hi_; }

    /// L2(R) norm by composite Gauss-Legendre quadrature over the support.
    double l2_norm(int panels_per_cell = 64) const;

  private:
    double lo_ = 0.0, hi_ = 0.0;
    std::function<cplx(double)> eval_;
};

/// Knobs for the expansion pipeline.
struct ExpansionConfig {
    int nmax = 10;        // band window |k| <= nmax
    int tgrid = 256;      // target number of quadrature nodes in t (>= 64)
    double eps_sing = 1e-3;   // middle rung of the exclusion-window ladder
    double a = -2.0, b = 2.0; // reconstruction interval (integers)
    int xquad = 256;      // samples per unit cell in x (even, >= 32)
    double cross_tol_rel = 1e-3;  // direct-vs-projection agreement, relative to ||f||
    double ode_tol = 1e-12;
    int workers = 0;      // 0 = default_workers()
    void validate() const;    // throws BadConfig
};

/// Quasi-periodic fiber of f at quasimomentum t, sampled on xgrid:
///   f_t(x) = sum_k f(x + k) e^{-ikt},
/// a finite sum thanks to compact support.  Satisfies
/// f_t(x+1) = e^{it} f_t(x) identically.
std::vector<cplx> gelfand_transform(const TestFunction& f, double t,
                                    const std::vector<double>& xgrid);

/// Expansion data of f over the eigenbasis of the fiber operator at t:
/// for each band label k (zigzag order, |k| <= nmax) the eigenvalue
/// lambda_k(t), the pairing alpha_k(t), the coefficient
/// a_k(t) = (f_t, Psi*_k)/alpha_k, and the unit-norm eigenfunction Psi_k
/// sampled on the uniform grid xgrid of [0, 1).
struct CoefficientSet {
    double t = 0.0;
    std::vector<int> labels;
    std::vector<cplx> lambda;
    std::vector<cplx> alpha;
    std::vector<cplx> a;
    std::vector<double> xgrid;
    std::vector<std::vector<cplx>> psi;   // psi[i] on xgrid, L2-normalized
};

/// Computes CoefficientSet at a single admissible t.  Throws ExclusionPoint
/// for t at 0 or +-pi (always outside the admissible set) and
/// MultipleEigenvalue when the eigen-pairing inside the window degenerates
/// (which is what happens at the finitely many excluded interior t).
CoefficientSet coefficients(const FourierPotential& p, const TestFunction& f,
                            double t, int nmax, const ExpansionConfig& cfg = {});

/// (2 pi)^{-1} * integral over t and x of |f_t|^2, divided by ||f||^2.
/// Equals 1 in exact arithmetic for every compactly supported f.
double parseval_check(const TestFunction& f, const ExpansionConfig& cfg = {});

/// Output of either reconstruction.  f_hat is the exclusion-window
/// extrapolation (Richardson in the window radius); rel_error_by_eps holds
/// the relative L2 errors of the three raw window radii in eps_ladder order.
struct ReconstructionReport {
    std::vector<double> x;        // output grid on [a, b], spacing 1/xquad
    std::vector<cplx> f_values;   // f on the grid
    std::vector<cplx> f_hat;      // reconstruction on the grid
    double abs_l2_error = 0.0;    // ||f_hat - f||_{L2(a,b)}
    double rel_l2_error = 0.0;    // ... / ||f||_{L2(R)}
    double parseval_ratio = 0.0;

    std::vector<double> eps_ladder;        // window radii, descending
    std::vector<double> rel_error_by_eps;  // rel L2 error per rung

    std::vector<int> band_labels;          // window labels not grouped
    std::vector<double> band_norms;        // L2(a,b) contribution per label
    std::vector<std::vector<cplx>> band_profiles;  // contribution per label on x
    std::vector<int> grouped_bands;        // labels pooled before integration
    double grouped_norm = 0.0;
    std::vector<cplx> grouped_profile;

    std::vector<double> t_nodes;           // quadrature nodes
    std::vector<std::vector<cplx>> coeff_lattice;  // a_k at t_nodes per window slot

    double cross_error = 0.0;              // direct only: rel L2 vs projection form
    std::vector<int> flipped_arcs;         // direct only: arcs with reversed branch
    std::vector<std::string> notes;
};

/// Reconstruction through the eigenprojection form: f is recovered as the
/// quadrature over admissible quasimomenta of the per-fiber expansion, with
/// the bands that carry singular points pooled into one jointly integrated
/// term.  Throws QuadratureNonconvergence when shrinking the exclusion
/// windows fails to converge.
ReconstructionReport reconstruct_bloch(const FourierPotential& p, const TestFunction& f,
                                       const ExpansionConfig& cfg = {});

/// Reconstruction through the lambda-plane form: each band arc contributes
/// the integral of phi(x, lambda)/p(lambda) with
///   phi(x,l) = theta'(1,l) h(l) phi(x,l)
///            + (theta(1,l) - phi'(1,l))/2 * (h(l) theta(x,l) + g(l) phi(x,l))
///            - phi(1,l) g(l) theta(x,l),
///   h = integral of phi * f,  g = integral of theta * f,
///   p = sqrt(4 - F^2),
/// parameterized by t along the arc.  The square-root branch is fixed per
/// arc by agreement with reconstruct_bloch (one sign flip retry); throws
/// BranchInconsistency if both signs disagree beyond cross_tol_rel * ||f||.
ReconstructionReport reconstruct_direct(const FourierPotential& p, const TestFunction& f,
                                        const ExpansionConfig& cfg = {});

} // namespace hill
