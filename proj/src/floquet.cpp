#include "hill/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "hill/galerkin.hpp"
#include "hill/parallel.hpp"
#include "hill/types.hpp"

namespace hill {

namespace {

constexpr cplx I{0.0, 1.0};

/// Mean over one period of a sampled 1-periodic function given on a uniform
/// grid with M+1 points (the last sample repeats the first period point and
/// is skipped).  For smooth periodic integrands this trapezoid rule converges
/// faster than any power of 1/M.
cplx period_mean(std::span<const cplx> f) {
    const std::size_t M = f.size() - 1;
    cplx s = 0.0;
    for (std::size_t j = 0; j < M; ++j) s += f[j];
    return s / double(M);
}

/// (f, g) = integral over one period of f conj(g); both factors carry the
/// same quasi-periodic multiplier, so the integrand is 1-periodic.
cplx period_inner(std::span<const cplx> f, std::span<const cplx> g) {
    const std::size_t M = f.size() - 1;
    cplx s = 0.0;
    for (std::size_t j = 0; j < M; ++j) s += f[j] * std::conj(g[j]);
    return s / double(M);
}

double period_norm(std::span<const cplx> f) {
    const std::size_t M = f.size() - 1;
    double s = 0.0;
    for (std::size_t j = 0; j < M; ++j) s += std::norm(f[j]);
    return std::sqrt(s / double(M));
}

/// Fourier coefficient (f, e^{i(2 pi k + t) x}) on the uniform grid.
cplx head_coefficient(std::span<const cplx> f, std::span<const double> x, int k, double t) {
    const std::size_t M = f.size() - 1;
    const double w = TWO_PI * k + t;
    cplx s = 0.0;
    for (std::size_t j = 0; j < M; ++j) s += f[j] * std::exp(-I * (w * x[j]));
    return s / double(M);
}

/// Deterministic phase convention: rotate f so that its largest-modulus
/// Fourier coefficient within the head window becomes real positive.  The
/// window is scanned in zigzag order (0, -1, +1, ...) so ties resolve to the
/// innermost mode.
void phase_fix(std::vector<cplx>& f, std::span<const double> x, int n, double t) {
    const int Kph = std::max(std::abs(n) + 2, 8);
    cplx best = 0.0;
    for (int pos = 0; pos <= 2 * Kph; ++pos) {
        const int k = zigzag_label(pos);
        const cplx u = head_coefficient(f, x, k, t);
        if (std::abs(u) > std::abs(best)) best = u;
    }
    if (!(std::abs(best) > 0.0)) return;   // flat function; nothing to rotate
    const cplx rot = std::conj(best) / std::abs(best);
    for (auto& v : f) v *= rot;
}

void scale(std::vector<cplx>& f, cplx s) {
    for (auto& v : f) v *= s;
}

std::vector<double> uniform_grid(int samples) {
    if (samples < 16)
        throw BadConfig("eigenfunction grid needs at least 16 samples, got " +
                        std::to_string(samples));
    std::vector<double> x(std::size_t(samples) + 1);
    for (int j = 0; j <= samples; ++j) x[std::size_t(j)] = double(j) / double(samples);
    return x;
}

/// Simple-band eigenvalue with its discriminant derivative; throws
/// MultipleEigenvalue when the jet classification or the derivative size
/// says the eigenvalue is not simple.
struct SimpleRoot {
    cplx lambda;
    cplx dF;
};

SimpleRoot simple_band_root(const FourierPotential& p, int n, double t,
                            const TrackingConfig& cfg, const char* who) {
    const auto be = bloch_eigenvalue(p, n, t, cfg);
    if (be.multiplicity >= 2)
        throw MultipleEigenvalue(std::string(who) + ": eigenvalue for band " +
                                 std::to_string(n) + " at t=" + std::to_string(t) +
                                 " is multiple (multiplicity " +
                                 std::to_string(be.multiplicity) + ")");
    const auto md = fundamental_at_one(p, be.lambda, cfg.ode_tol, 1);
    if (std::abs(md.dF) < multiple_root_tolerance(be.lambda))
        throw MultipleEigenvalue(std::string(who) + ": |dF/dlambda| = " +
                                 std::to_string(std::abs(md.dF)) + " for band " +
                                 std::to_string(n) + " at t=" + std::to_string(t) +
                                 " is below the simple-root threshold");
    return {be.lambda, md.dF};
}

} // namespace

double dirichlet_degeneracy_tol(cplx lambda) {
    return 1e-6 / std::sqrt(1.0 + std::abs(lambda));
}

FloquetPair floquet_solutions(const FourierPotential& p, cplx lambda, double t,
                              std::span<const double> grid, double ode_tol) {
    if (!finite(lambda)) throw NonFiniteInput("floquet_solutions: lambda is not finite");
    if (!std::isfinite(t)) throw NonFiniteInput("floquet_solutions: t is not finite");
    if (grid.size() < 2 || grid.front() != 0.0 || grid.back() != 1.0)
        throw BadConfig("floquet_solutions: grid must span [0, 1]");

    FloquetPair fp;
    fp.lambda = lambda;
    fp.t = t;
    fp.trace = fundamental_on_grid(p, lambda, grid, ode_tol);
    fp.x.assign(grid.begin(), grid.end());
    fp.theta1 = fp.trace.theta.back();
    fp.dtheta1 = fp.trace.dtheta.back();
    fp.phi1 = fp.trace.phi.back();
    fp.dphi1 = fp.trace.dphi.back();

    const cplx F = fp.theta1 + fp.dphi1;
    const cplx rhs = 2.0 * std::cos(t);
    if (std::abs(F - rhs) > 1e-6 * (1.0 + std::abs(rhs)))
        throw NotAnEigenvalue("floquet_solutions: |F(lambda) - 2 cos t| = " +
                              std::to_string(std::abs(F - rhs)) +
                              "; lambda is not an eigenvalue at this t");
    if (std::abs(fp.phi1) <= dirichlet_degeneracy_tol(lambda))
        throw DirichletDegeneracy("floquet_solutions: |phi(1, lambda)| = " +
                                  std::to_string(std::abs(fp.phi1)) +
                                  " is below the degeneracy threshold");

    fp.c_plus = (std::exp(I * t) - fp.theta1) / fp.phi1;
    fp.c_minus = (std::exp(-I * t) - fp.theta1) / fp.phi1;

    const std::size_t m = grid.size();
    fp.plus.resize(m);
    fp.dplus.resize(m);
    fp.minus.resize(m);
    fp.dminus.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        fp.plus[j] = fp.trace.theta[j] + fp.c_plus * fp.trace.phi[j];
        fp.dplus[j] = fp.trace.dtheta[j] + fp.c_plus * fp.trace.dphi[j];
        fp.minus[j] = fp.trace.theta[j] + fp.c_minus * fp.trace.phi[j];
        fp.dminus[j] = fp.trace.dtheta[j] + fp.c_minus * fp.trace.dphi[j];
    }
    return fp;
}

double quasiperiodicity_defect(const FloquetPair& fp, bool plus_branch) {
    const auto& f = plus_branch ? fp.plus : fp.minus;
    const auto& df = plus_branch ? fp.dplus : fp.dminus;
    const cplx mult = std::exp((plus_branch ? I : -I) * fp.t);
    // value and slope of the solution at x = 1, continued by the equation
    const cplx f1 = f.back();
    const cplx df1 = df.back();
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < fp.x.size(); ++j) {
        // direct continuation past the period: y(1 + s) solves the same
        // equation with data (f1, df1) at s = 0, hence equals
        // theta(s) f1 + phi(s) df1 by 1-periodicity of the potential
        const cplx cont = fp.trace.theta[j] * f1 + fp.trace.phi[j] * df1;
        const cplx dcont = fp.trace.dtheta[j] * f1 + fp.trace.dphi[j] * df1;
        num = std::max(num, std::abs(cont - mult * f[j]));
        num = std::max(num, std::abs(dcont - mult * df[j]));
        den = std::max({den, std::abs(f[j]), std::abs(df[j])});
    }
    return num / (1.0 + den);
}

FloquetRecord eigenfunction_pair(const FourierPotential& p, int n, double t,
                                 const TrackingConfig& cfg, int samples) {
    validate(cfg);
    const auto root = simple_band_root(p, n, t, cfg, "eigenfunction_pair");

    FloquetRecord rec;
    rec.n = n;
    rec.t = t;
    rec.lambda = root.lambda;
    rec.x = uniform_grid(samples);

    bool use_matrix_route = false;
    try {
        const auto fp = floquet_solutions(p, root.lambda, t, rec.x, cfg.ode_tol);
        rec.psi = fp.plus;
        rec.psi_star.resize(fp.minus.size());
        // the adjoint problem has the conjugated potential and the same
        // boundary multiplier, so its eigenfunction is conj(Phi_-)
        for (std::size_t j = 0; j < fp.minus.size(); ++j)
            rec.psi_star[j] = std::conj(fp.minus[j]);
    } catch (const DirichletDegeneracy&) {
        use_matrix_route = true;
    }

    if (use_matrix_route) {
        const int K = std::max({std::abs(n) + 8, p.order() + 4, 16});
        const auto fb = fiber_basis(p, t, K);
        int k = 0;
        double best = std::abs(fb.lambda(0) - root.lambda);
        for (int j = 1; j < fb.dim(); ++j) {
            const double d = std::abs(fb.lambda(j) - root.lambda);
            if (d < best) {
                best = d;
                k = j;
            }
        }
        if (best > 1e-5 * (1.0 + std::abs(root.lambda)))
            throw NotAnEigenvalue("eigenfunction_pair: fiber matrix has no eigenvalue near " +
                                  std::to_string(root.lambda.real()) + "+" +
                                  std::to_string(root.lambda.imag()) + "i");
        const std::size_t m = rec.x.size();
        rec.psi.assign(m, 0.0);
        rec.psi_star.assign(m, 0.0);
        for (int a = 0; a < fb.dim(); ++a) {
            const double w = TWO_PI * (a - K) + t;
            const cplx v = fb.V(a, k);
            const cplx u = std::conj(fb.W(k, a));
            if (v == cplx(0.0) && u == cplx(0.0)) continue;
            for (std::size_t j = 0; j < m; ++j) {
                const cplx e = std::exp(I * (w * rec.x[j]));
                rec.psi[j] += v * e;
                rec.psi_star[j] += u * e;
            }
        }
    }

    scale(rec.psi, 1.0 / period_norm(rec.psi));
    scale(rec.psi_star, 1.0 / period_norm(rec.psi_star));
    phase_fix(rec.psi, rec.x, n, t);
    phase_fix(rec.psi_star, rec.x, n, t);
    rec.alpha = period_inner(rec.psi, rec.psi_star);
    if (!(std::abs(rec.alpha) > 0.0))
        throw MultipleEigenvalue("eigenfunction_pair: alpha vanished for band " +
                                 std::to_string(n) + " at t=" + std::to_string(t));
    rec.proj_norm = 1.0 / std::abs(rec.alpha);
    return rec;
}

std::vector<cplx> reciprocal_eigenfunction(const FloquetRecord& rec) {
    std::vector<cplx> chi(rec.psi_star.size());
    const cplx s = 1.0 / std::conj(rec.alpha);
    for (std::size_t j = 0; j < chi.size(); ++j) chi[j] = rec.psi_star[j] * s;
    return chi;
}

std::vector<AlphaSample> alpha_profile(const FourierPotential& p, int n, int tgrid,
                                       const TrackingConfig& cfg, int samples) {
    validate(cfg);
    if (tgrid < 2) throw BadConfig("alpha_profile: tgrid must be at least 2");
    std::vector<AlphaSample> out(static_cast<std::size_t>(tgrid));
    parallel_for(
        std::size_t(tgrid),
        [&](std::size_t j) {
            const double tj = (double(j) + 0.5) * PI / double(tgrid);
            try {
                const auto rec = eigenfunction_pair(p, n, tj, cfg, samples);
                out[j] = {tj, rec.alpha, true, std::string()};
            } catch (const MultipleEigenvalue& e) {
                out[j] = {tj, cplx(0.0), false, e.what()};
            }
        },
        cfg.workers);
    return out;
}

double projection_norm_arc(const FourierPotential& p, int n, double t_lo, double t_hi,
                           const TrackingConfig& cfg, int samples) {
    validate(cfg);
    if (!std::isfinite(t_lo) || !std::isfinite(t_hi) || !(t_lo < t_hi))
        throw BadConfig("projection_norm_arc: need finite t_lo < t_hi");
    if (t_lo < -PI - 1e-12 || t_hi > PI + 1e-12)
        throw BadConfig("projection_norm_arc: arc must lie within [-pi, pi]");
    if (samples < 5) throw BadConfig("projection_norm_arc: need at least 5 samples");

    auto eval = [&](double t) -> double {
        try {
            return eigenfunction_pair(p, n, t, cfg, 256).proj_norm;
        } catch (const MultipleEigenvalue& e) {
            throw IrregularArc(std::string("projection_norm_arc: ") + e.what());
        }
    };

    double lo = t_lo, hi = t_hi;
    int m = samples;
    double best_val = 0.0, best_t = t_lo;
    for (int level = 0; level <= 3; ++level) {
        const double h = (hi - lo) / double(m - 1);
        std::vector<double> vals(static_cast<std::size_t>(m));
        parallel_for(
            std::size_t(m), [&](std::size_t j) { vals[j] = eval(lo + h * double(j)); },
            cfg.workers);
        for (int j = 0; j < m; ++j)
            if (vals[std::size_t(j)] > best_val) {
                best_val = vals[std::size_t(j)];
                best_t = lo + h * double(j);
            }
        // focus the next level on the neighborhood of the current maximizer
        lo = std::max(t_lo, best_t - h);
        hi = std::min(t_hi, best_t + h);
        m = 9;
    }
    return best_val;
}

double discriminant_identity_error(const FourierPotential& p, int n, double t,
                                   const TrackingConfig& cfg, int samples) {
    validate(cfg);
    const auto root = simple_band_root(p, n, t, cfg, "discriminant_identity_error");
    const auto grid = uniform_grid(samples);
    const auto fp = floquet_solutions(p, root.lambda, t, grid, cfg.ode_tol);
    std::vector<cplx> prod(fp.plus.size());
    for (std::size_t j = 0; j < prod.size(); ++j) prod[j] = fp.plus[j] * fp.minus[j];
    const cplx rhs = -fp.phi1 * period_mean(prod);
    const double den = std::max(std::abs(root.dF), std::abs(rhs));
    if (!(den > 0.0)) return 0.0;
    return std::abs(root.dF - rhs) / den;
}

TailProfile fourier_tail_profile(const FloquetRecord& rec) {
    std::vector<int> ks = {-(rec.n + 1), -rec.n, rec.n, rec.n + 1};
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    TailProfile tp;
    double head_mass = 0.0;
    for (const int k : ks) {
        const cplx u = head_coefficient(rec.psi, rec.x, k, rec.t);
        tp.head.emplace_back(k, u);
        head_mass += std::norm(u);
    }
    tp.tail_mass = std::max(0.0, 1.0 - head_mass);
    return tp;
}

} // namespace hill
