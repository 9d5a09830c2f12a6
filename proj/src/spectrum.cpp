#include "hill/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "hill/galerkin.hpp"
#include "hill/parallel.hpp"

namespace hill {

void validate(const TrackingConfig& cfg) {
    if (cfg.nmax < 0) throw BadConfig("TrackingConfig: nmax must be >= 0");
    if (cfg.tgrid < 16) throw BadConfig("TrackingConfig: tgrid must be >= 16");
    if (!(cfg.rho > 0.0) || !(15.0 * PI * cfg.rho < 1.0))
        throw BadConfig("TrackingConfig: rho must satisfy 0 < 15*pi*rho < 1");
    if (!(cfg.newton_tol > 0.0)) throw BadConfig("TrackingConfig: newton_tol must be positive");
    if (cfg.newton_maxiter < 1) throw BadConfig("TrackingConfig: newton_maxiter must be >= 1");
    if (!(cfg.ode_tol > 0.0)) throw BadConfig("TrackingConfig: ode_tol must be positive");
    if (!(cfg.membership_tol > 0.0))
        throw BadConfig("TrackingConfig: membership_tol must be positive");
}

// |F'| at lambda has natural size ~ |sin t| / sqrt(|lambda|), so the cutoff
// for "F' vanishes" must shrink like 1/sqrt(lambda) to stay meaningful at
// high energy.
double multiple_root_tolerance(cplx lambda) {
    return 1e-6 / std::sqrt(1.0 + std::abs(lambda));
}

int seed_threshold(const FourierPotential& p) { return std::max(2 * p.order(), 4); }

namespace {

// |F''| at lambda has natural size ~ 1 / |lambda|.
double second_derivative_tolerance(cplx lambda) { return 1e-6 / (1.0 + std::abs(lambda)); }

double merge_radius(cplx lambda) { return std::max(1e-8, 4e-13 * (1.0 + std::abs(lambda))); }

cplx symbol_seed(int n, double t) {
    const double u = TWO_PI * n + t;
    return cplx(u * u, 0.0);
}

std::string fmt_cplx(cplx z) {
    std::ostringstream os;
    os << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i";
    return os.str();
}

// Core Newton/Schroeder iteration on G(lambda) = F(lambda) - rhs, optionally
// deflating a known root ("avoid") so a second root of a colliding pair can
// be recovered.  Near a double root the Schroeder step degenerates when F'
// is symmetric-small; the fallback jumps by sqrt(2G/F'') and picks the
// branch with the smaller residual.
RootRefinement refine_core(const FourierPotential& p, cplx seed, cplx rhs, double tol,
                           int maxiter, double ode_tol, std::optional<cplx> avoid) {
    if (!finite(seed) || !finite(rhs))
        throw NonFiniteInput("refine_discriminant_root: non-finite seed or right-hand side");
    RootRefinement out;
    cplx lam = seed;
    MonodromyData md = fundamental_at_one(p, lam, ode_tol, 1);
    cplx G = md.F - rhs;
    bool have_d2 = false;
    cplx d2 = 0.0;
    int it = 0;
    for (; it < maxiter; ++it) {
        const bool distinct = !avoid || std::abs(lam - *avoid) > merge_radius(lam);
        if (std::abs(G) < tol && distinct) break;

        cplx step;
        // switch to the multiple-root iteration well before the final
        // classification threshold, so a double root is approached
        // quadratically instead of stalling in linear Newton
        const double switch_tol = 1e-3 / std::sqrt(1.0 + std::abs(lam));
        if (std::abs(md.dF) < switch_tol || (avoid && !distinct)) {
            const auto m2 = fundamental_at_one(p, lam, ode_tol, 2);
            have_d2 = true;
            d2 = m2.d2F;
            G = m2.F - rhs;
            if (std::abs(m2.d2F) > 0.0 &&
                std::norm(m2.dF) < 1e-2 * std::abs(G * m2.d2F) && std::abs(G) >= tol) {
                // symmetric stagnation point between the two branches of a
                // double root: jump by the quadratic model and keep the
                // branch with the smaller residual
                const cplx s = std::sqrt(2.0 * G / m2.d2F);
                const cplx c1 = lam - s, c2 = lam + s;
                const double g1 = std::abs(fundamental_at_one(p, c1, ode_tol, 0).F - rhs);
                const double g2 = std::abs(fundamental_at_one(p, c2, ode_tol, 0).F - rhs);
                step = (g1 <= g2) ? s : -s;
            } else {
                const cplx den = m2.dF * m2.dF - G * m2.d2F;
                step = (std::abs(den) > 0.0) ? G * m2.dF / den : cplx(0.0);
            }
        } else {
            step = G / md.dF;
        }
        if (avoid) {
            // deflated Newton: G/(lam - avoid) has the extra logarithmic term
            const cplx gap = lam - *avoid;
            if (std::abs(gap) > 0.0) {
                const cplx den = md.dF - G / gap;
                if (std::abs(den) > 0.0) step = G / den;
            } else {
                step = -cplx(merge_radius(lam), 0.0);
            }
        }
        const double cap = 0.5 * (1.0 + std::abs(lam));
        if (std::abs(step) > cap) step *= cap / std::abs(step);
        if (!finite(step)) break;
        lam -= step;
        if (!finite(lam)) break;
        md = fundamental_at_one(p, lam, ode_tol, 1);
        G = md.F - rhs;
        have_d2 = false;
    }

    out.lambda = lam;
    out.iterations = it;
    out.F = md.F;
    out.dF = md.dF;
    out.converged = finite(lam) && std::abs(G) < tol &&
                    (!avoid || std::abs(lam - *avoid) > merge_radius(lam));
    out.multiplicity = 1;
    if (out.converged && std::abs(md.dF) < multiple_root_tolerance(lam)) {
        if (!have_d2) {
            const auto m2 = fundamental_at_one(p, lam, ode_tol, 2);
            d2 = m2.d2F;
        }
        out.multiplicity = (std::abs(d2) >= second_derivative_tolerance(lam)) ? 2 : 3;
        if (out.multiplicity == 2) {
            // polish the double root as the (simple) zero of F'; this removes
            // the sqrt(noise) accuracy loss of residual-only convergence
            cplx best = lam;
            for (int k = 0; k < 3; ++k) {
                const auto m2 = fundamental_at_one(p, best, ode_tol, 2);
                if (std::abs(m2.d2F) == 0.0) break;
                const cplx dstep = m2.dF / m2.d2F;
                if (!finite(dstep) || std::abs(dstep) > 0.1 * (1.0 + std::abs(best))) break;
                best -= dstep;
                if (std::abs(dstep) < 1e-15 * (1.0 + std::abs(best))) break;
            }
            const auto mf = fundamental_at_one(p, best, ode_tol, 2);
            if (std::abs(mf.F - rhs) < tol) {
                out.lambda = best;
                out.F = mf.F;
                out.dF = mf.dF;
                out.d2F = mf.d2F;
                d2 = mf.d2F;
            }
        }
    }
    out.d2F = d2;
    return out;
}

} // namespace

RootRefinement refine_discriminant_root(const FourierPotential& p, cplx seed, cplx rhs,
                                        double tol, int maxiter, double ode_tol) {
    return refine_core(p, seed, rhs, tol, maxiter, ode_tol, std::nullopt);
}

namespace {

void check_quasimomentum(double t, const char* who) {
    if (!std::isfinite(t) || t < -PI - 1e-12 || t > PI + 1e-12)
        throw BadConfig(std::string(who) + ": t must lie in (-pi, pi]");
}

// Seeds for every band label, Galerkin below the threshold and the free
// symbol above it.  `ta` must be the non-negative representative |t|.
std::vector<cplx> band_seeds(const FourierPotential& p, double ta, int nmax) {
    const int N = seed_threshold(p);
    const int nsmall = std::min(N, nmax);
    const int Kseed = std::max({nsmall + 8, p.order(), 12});
    auto gal = galerkin_eigen(p, ta, Kseed);
    std::vector<cplx> seeds(2 * nmax + 1);
    for (int n = -nmax; n <= nmax; ++n)
        seeds[n + nmax] =
            (std::abs(n) <= N) ? gal[zigzag_position(n)].lambda : symbol_seed(n, ta);
    return seeds;
}

// Refined roots for every band label -nmax..nmax (index n + nmax) at the
// fiber |t| = ta.  Labels whose seeds collapsed onto an already-claimed
// simple root are re-refined with that root deflated; an unresolvable
// collision throws SeedCollision.  Failed refinements either throw
// NewtonDivergence or, when `errs` is supplied, leave a message there with
// rr[i].converged == false.
std::vector<RootRefinement> fiber_roots(const FourierPotential& p, double ta, int nmax,
                                        const TrackingConfig& cfg,
                                        std::vector<std::string>* errs_out) {
    const cplx rhs = 2.0 * std::cos(ta);
    const int m = 2 * nmax + 1;
    const auto seeds = band_seeds(p, ta, nmax);
    std::vector<RootRefinement> rr(m);
    std::vector<std::string> errs(m);
    parallel_for(
        std::size_t(m),
        [&](std::size_t i) {
            try {
                rr[i] = refine_core(p, seeds[i], rhs, cfg.newton_tol, cfg.newton_maxiter,
                                    cfg.ode_tol, std::nullopt);
                if (!rr[i].converged)
                    errs[i] = "no Newton convergence for band " + std::to_string(int(i) - nmax) +
                              " at t=" + std::to_string(ta);
            } catch (const Error& e) {
                errs[i] = e.what();
            }
        },
        cfg.workers);

    // resolve collisions in zigzag order: an inner label keeps its root, a
    // later label that lands on the same simple root is deflated away from it
    for (int k = 0; k < m; ++k) {
        const int n = zigzag_label(k);
        const std::size_t i = std::size_t(n + nmax);
        if (!errs[i].empty()) continue;
        for (int k2 = 0; k2 < k; ++k2) {
            const std::size_t i2 = std::size_t(zigzag_label(k2) + nmax);
            if (!errs[i2].empty()) continue;
            if (std::abs(rr[i].lambda - rr[i2].lambda) > merge_radius(rr[i].lambda)) continue;
            if (rr[i].multiplicity >= 2 || rr[i2].multiplicity >= 2) break;   // genuine
            auto rd = refine_core(p, seeds[i], rhs, cfg.newton_tol, cfg.newton_maxiter,
                                  cfg.ode_tol, rr[i2].lambda);
            if (rd.converged &&
                std::abs(rd.lambda - rr[i2].lambda) > merge_radius(rd.lambda)) {
                rr[i] = rd;
                k2 = -1;   // restart collision scan for the new value
                continue;
            }
            throw SeedCollision("fiber eigenvalues: bands " + std::to_string(zigzag_label(k2)) +
                                " and " + std::to_string(n) +
                                " converged to one simple root near lambda=" +
                                fmt_cplx(rr[i].lambda) + " at t=" + std::to_string(ta));
        }
    }
    if (errs_out) {
        *errs_out = std::move(errs);
    } else {
        for (int i = 0; i < m; ++i)
            if (!errs[i].empty()) throw NewtonDivergence("fiber eigenvalues: " + errs[i]);
    }
    return rr;
}

} // namespace

std::vector<BlochEigenvalue> eigenvalues_at(const FourierPotential& p, double t,
                                            const TrackingConfig& cfg,
                                            std::vector<IndexFailure>* failures) {
    validate(cfg);
    check_quasimomentum(t, "eigenvalues_at");
    const double ta = std::abs(t);
    const int nmax = cfg.nmax, m = 2 * nmax + 1;
    std::vector<std::string> errs;
    auto rr = fiber_roots(p, ta, nmax, cfg, failures ? &errs : nullptr);

    // merge duplicates in zigzag label order so the representative label of a
    // multiple root is the innermost band; the reported multiplicity is the
    // larger of the merged-seed count and the jet-based estimate
    std::vector<BlochEigenvalue> out;
    std::vector<int> seed_count, jet_mult;
    out.reserve(m);
    for (int k = 0; k < m; ++k) {
        const int n = zigzag_label(k);
        const std::size_t i = std::size_t(n + nmax);
        if (failures && !errs[i].empty()) {
            failures->push_back({n, errs[i]});
            continue;
        }
        const cplx lam = rr[i].lambda;
        int hit = -1;
        for (std::size_t j = 0; j < out.size(); ++j)
            if (std::abs(out[j].lambda - lam) <= merge_radius(lam)) {
                hit = int(j);
                break;
            }
        if (hit < 0) {
            out.push_back({n, t, lam, rr[i].multiplicity});
            seed_count.push_back(1);
            jet_mult.push_back(rr[i].multiplicity);
        } else {
            seed_count[hit] += 1;
            jet_mult[hit] = std::max(jet_mult[hit], rr[i].multiplicity);
            out[hit].multiplicity = std::max(seed_count[hit], jet_mult[hit]);
        }
    }
    std::sort(out.begin(), out.end(), [](const BlochEigenvalue& a, const BlochEigenvalue& b) {
        if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
        return a.lambda.imag() < b.lambda.imag();
    });
    return out;
}

BlochEigenvalue bloch_eigenvalue(const FourierPotential& p, int n, double t,
                                 const TrackingConfig& cfg) {
    validate(cfg);
    check_quasimomentum(t, "bloch_eigenvalue");
    const double ta = std::abs(t);
    const cplx rhs = 2.0 * std::cos(ta);
    const int N = seed_threshold(p);
    cplx seed;
    if (std::abs(n) <= N) {
        const int Kseed = std::max({std::abs(n) + 8, p.order(), 12});
        seed = galerkin_eigen(p, ta, Kseed)[zigzag_position(n)].lambda;
    } else {
        seed = symbol_seed(n, ta);
    }
    auto rr = refine_core(p, seed, rhs, cfg.newton_tol, cfg.newton_maxiter, cfg.ode_tol,
                          std::nullopt);
    if (!rr.converged)
        throw NewtonDivergence("bloch_eigenvalue: no convergence for n=" + std::to_string(n) +
                               " at t=" + std::to_string(t));
    return {n, t, rr.lambda, rr.multiplicity};
}

namespace {

struct StepState {
    cplx lambda;
    cplx dF;
    int mult = 1;
    bool forced = false;
};

struct BandMarcher {
    const FourierPotential& p;
    const TrackingConfig& cfg;
    int n;

    double jump_cap(cplx lam_from, cplx vel, double dt) const {
        const double adt = std::abs(dt);
        return std::max({16.0 * PI * (std::abs(n) + 2.0) * adt,
                         6.0 * std::sqrt((1.0 + std::abs(lam_from)) * adt),
                         4.0 * std::abs(vel) * adt});
    }

    StepState advance(double t_from, const StepState& from, double t_to, int depth) const {
        const double dt = t_to - t_from;
        cplx vel = 0.0;
        if (std::abs(from.dF) > 1e-300) {
            vel = -2.0 * std::sin(t_from) / from.dF;
            // a blown-up velocity signals a nearby critical point; prediction
            // by it would overshoot, so fall back to zero-order continuation
            if (std::abs(vel) * std::abs(dt) > 0.25 * (1.0 + std::abs(from.lambda))) vel = 0.0;
        }
        const cplx pred = from.lambda + vel * dt;
        RootRefinement rr;
        bool ok = false;
        try {
            rr = refine_core(p, pred, 2.0 * std::cos(t_to), cfg.newton_tol, cfg.newton_maxiter,
                             cfg.ode_tol, std::nullopt);
            ok = rr.converged;
        } catch (const NumericalError&) {
            ok = false;
        }
        if (ok && std::abs(rr.lambda - from.lambda) > jump_cap(from.lambda, vel, dt)) ok = false;
        if (ok) return {rr.lambda, rr.dF, rr.multiplicity, false};
        if (depth >= 6) {
            StepState st;
            st.lambda = rr.converged ? rr.lambda : pred;
            st.dF = rr.converged ? rr.dF : cplx(0.0);
            st.mult = rr.converged ? rr.multiplicity : 1;
            st.forced = true;
            return st;
        }
        const double tm = 0.5 * (t_from + t_to);
        StepState mid = advance(t_from, from, tm, depth + 1);
        StepState end = advance(tm, mid, t_to, depth + 1);
        end.forced = end.forced || mid.forced;
        return end;
    }
};

} // namespace

std::vector<SpectralCurve> track_bands(const FourierPotential& p, const TrackingConfig& cfg) {
    validate(cfg);
    const int G = cfg.tgrid, nmax = cfg.nmax, m = 2 * nmax + 1;
    std::vector<double> tg(G);
    for (int j = 0; j < G; ++j) tg[j] = PI * double(j) / double(G - 1);
    const int ja = (G - 1) / 2;   // anchor node near pi/2: fibers are well separated there

    std::vector<std::vector<cplx>> lam(m, std::vector<cplx>(G));
    std::vector<std::vector<cplx>> dfv(m, std::vector<cplx>(G));
    std::vector<std::vector<int>> mlt(m, std::vector<int>(G, 1));
    std::vector<unsigned char> susp(m, 0);
    std::vector<std::vector<std::string>> notes(m);

    // Near t = 0 and t = pi band pairs nearly collide and the level curves
    // steepen like 1/F', so linear continuation overshoots systematically.
    // Nodes inside those zones are therefore refined from fresh fiber seeds;
    // the continuation march covers only the interior range [jlo, jhi].
    int jlo = 0, jhi = G - 1;
    while (jlo < ja && tg[jlo] <= cfg.rho) ++jlo;
    while (jhi > ja && tg[jhi] >= PI - cfg.rho) --jhi;
    for (int j = 0; j < G; ++j) {
        if (j >= jlo && j <= jhi) continue;
        const auto rr = fiber_roots(p, tg[j], nmax, cfg, nullptr);
        for (int bi = 0; bi < m; ++bi) {
            lam[bi][j] = rr[bi].lambda;
            dfv[bi][j] = rr[bi].dF;
            mlt[bi][j] = rr[bi].multiplicity;
        }
    }

    const auto anchor = fiber_roots(p, tg[ja], nmax, cfg, nullptr);
    std::vector<std::string> errs(m);
    parallel_for(
        std::size_t(m),
        [&](std::size_t bi) {
            const int n = int(bi) - nmax;
            try {
                lam[bi][ja] = anchor[bi].lambda;
                dfv[bi][ja] = anchor[bi].dF;
                mlt[bi][ja] = anchor[bi].multiplicity;
                BandMarcher bm{p, cfg, n};
                StepState st{anchor[bi].lambda, anchor[bi].dF, anchor[bi].multiplicity, false};
                for (int j = ja + 1; j <= jhi; ++j) {
                    st = bm.advance(tg[j - 1], st, tg[j], 0);
                    lam[bi][j] = st.lambda;
                    dfv[bi][j] = st.dF;
                    mlt[bi][j] = st.mult;
                    if (st.forced) {
                        susp[bi] = 1;
                        notes[bi].push_back("forced continuation step at t=" +
                                            std::to_string(tg[j]));
                    }
                }
                st = StepState{lam[bi][ja], dfv[bi][ja], mlt[bi][ja], false};
                for (int j = ja - 1; j >= jlo; --j) {
                    st = bm.advance(tg[j + 1], st, tg[j], 0);
                    lam[bi][j] = st.lambda;
                    dfv[bi][j] = st.dF;
                    mlt[bi][j] = st.mult;
                    if (st.forced) {
                        susp[bi] = 1;
                        notes[bi].push_back("forced continuation step at t=" +
                                            std::to_string(tg[j]));
                    }
                }
            } catch (const Error& e) {
                errs[bi] = e.what();
            }
        },
        cfg.workers);
    for (int bi = 0; bi < m; ++bi)
        if (!errs[bi].empty()) throw NewtonDivergence(errs[bi]);

    // ambiguity scan: two distinct labels sharing a simple root means one of
    // the continuations lost its band
    for (int j = 0; j < G; ++j) {
        for (int a = 0; a < m; ++a)
            for (int b = a + 1; b < m; ++b) {
                const double d = std::abs(lam[a][j] - lam[b][j]);
                if (d >= 1e-9 * (1.0 + std::abs(lam[a][j]))) continue;
                if (mlt[a][j] >= 2 || mlt[b][j] >= 2) continue;   // genuine multiple root
                susp[a] = susp[b] = 1;
                const std::string msg = "ambiguous match of bands " + std::to_string(a - nmax) +
                                        " and " + std::to_string(b - nmax) +
                                        " at t=" + std::to_string(tg[j]);
                notes[a].push_back(msg);
                notes[b].push_back(msg);
            }
    }

    // edge-zone relabeling: inside the pairing disks, band pairs are labeled
    // by ascending real part (ties by imaginary part)
    auto order_pair = [&](int a, int b, int j) {
        // enforce (Re, Im) of curve a <= curve b at node j by swapping samples
        const cplx za = lam[a][j], zb = lam[b][j];
        const bool swap = (za.real() > zb.real()) ||
                          (za.real() == zb.real() && za.imag() > zb.imag());
        if (swap) {
            std::swap(lam[a][j], lam[b][j]);
            std::swap(dfv[a][j], dfv[b][j]);
            std::swap(mlt[a][j], mlt[b][j]);
        }
    };
    for (int j = 0; j < G; ++j) {
        const double t = tg[j];
        if (t <= cfg.rho) {
            for (int n = 1; n <= nmax; ++n) {
                const int a = -n + nmax, b = n + nmax;
                const cplx center = symbol_seed(n, t);
                const double radius = 15.0 * PI * n * cfg.rho;
                if (std::abs(lam[a][j] - center) <= radius &&
                    std::abs(lam[b][j] - center) <= radius)
                    order_pair(a, b, j);
            }
        }
        if (t >= PI - cfg.rho) {
            for (int n = 0; n < nmax; ++n) {
                const int a = n + nmax, b = -(n + 1) + nmax;
                const cplx center = symbol_seed(n, t);
                const double radius = 15.0 * PI * std::max(n, 1) * cfg.rho;
                if (std::abs(lam[a][j] - center) <= radius &&
                    std::abs(lam[b][j] - center) <= radius)
                    order_pair(a, b, j);
            }
        }
    }

    std::vector<SpectralCurve> curves(m);
    for (int bi = 0; bi < m; ++bi) {
        curves[bi].n = bi - nmax;
        curves[bi].closed = true;
        curves[bi].suspect = susp[bi] != 0;
        curves[bi].notes = std::move(notes[bi]);
        curves[bi].samples.resize(G);
        for (int j = 0; j < G; ++j)
            curves[bi].samples[j] = {bi - nmax, tg[j], lam[bi][j], mlt[bi][j]};
    }
    return curves;
}

Membership spectrum_membership(const FourierPotential& p, cplx lambda,
                               const TrackingConfig& cfg) {
    validate(cfg);
    if (!finite(lambda)) throw NonFiniteInput("spectrum_membership: lambda is not finite");
    const cplx F = discriminant(p, lambda, cfg.ode_tol);
    const double tol = cfg.membership_tol;
    if (std::abs(F.imag()) < tol && std::abs(F.real()) <= 2.0 - tol) return Membership::IN;
    if (std::abs(F.imag()) > tol || std::abs(F.real()) > 2.0 + tol) return Membership::OUT;
    return Membership::UNCERTAIN;
}

} // namespace hill
