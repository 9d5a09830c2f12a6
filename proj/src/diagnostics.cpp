#include "hill/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include "hill/floquet.hpp"
#include "hill/monodromy.hpp"
#include "hill/parallel.hpp"

namespace hill {

namespace {

std::string fmt_num(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string fmt_cplx(cplx z) {
    return "(" + fmt_num(z.real()) + "," + fmt_num(z.imag()) + ")";
}

/// Newton refinement of a zero of F' starting from `seed`, using the
/// second-derivative jet.  Keeps the best iterate seen.
struct RefinedCritical {
    cplx lambda;
    MonodromyData md;
    bool converged = false;
};

RefinedCritical refine_critical(const FourierPotential& p, cplx seed, double ode_tol,
                                int maxiter) {
    RefinedCritical rc;
    cplx lam = seed;
    double best = std::numeric_limits<double>::infinity();
    cplx best_lam = seed;
    MonodromyData best_md;
    for (int it = 0; it < maxiter; ++it) {
        const auto md = fundamental_at_one(p, lam, ode_tol, 2);
        const double r = std::abs(md.dF);
        if (r < best) {
            best = r;
            best_lam = lam;
            best_md = md;
        }
        if (r <= 1e-12 * std::sqrt(1.0 + std::abs(lam))) break;   // noise floor of F'
        if (!(std::abs(md.d2F) > 0.0)) break;
        cplx step = md.dF / md.d2F;
        const double cap = 0.5 * (1.0 + std::abs(lam));
        const double sa = std::abs(step);
        if (sa > cap) step *= cap / sa;
        lam -= step;
        if (sa <= 1e-14 * (1.0 + std::abs(lam))) {
            const auto md2 = fundamental_at_one(p, lam, ode_tol, 2);
            if (std::abs(md2.dF) < best) {
                best = std::abs(md2.dF);
                best_lam = lam;
                best_md = md2;
            }
            break;
        }
    }
    rc.lambda = best_lam;
    rc.md = best_md;
    rc.converged = std::isfinite(best) && best < critical_point_tolerance(best_lam);
    return rc;
}

} // namespace

double endpoint_degeneracy_tol(cplx lambda) { return 1e-7 * (1.0 + std::abs(lambda)); }

double critical_point_tolerance(cplx lambda) { return 1e-6 * (1.0 + std::abs(lambda)); }

SingularityReport find_singularities(const FourierPotential& p, const TrackingConfig& cfg) {
    validate(cfg);
    return find_singularities(p, track_bands(p, cfg), cfg);
}

SingularityReport find_singularities(const FourierPotential& p,
                                     const std::vector<SpectralCurve>& curves,
                                     const TrackingConfig& cfg) {
    validate(cfg);
    SingularityReport rep;
    const int m = static_cast<int>(curves.size());
    const int G = cfg.tgrid;

    // |F'| along every tracked sample, computed in parallel over (band, node)
    std::vector<std::vector<double>> absdF(static_cast<std::size_t>(m),
                                           std::vector<double>(static_cast<std::size_t>(G), 0.0));
    parallel_for(static_cast<std::size_t>(m) * static_cast<std::size_t>(G),
                 [&](std::size_t idx) {
                     const std::size_t bi = idx / static_cast<std::size_t>(G);
                     const std::size_t j = idx % static_cast<std::size_t>(G);
                     const auto md =
                         fundamental_at_one(p, curves[bi].samples[j].lambda, cfg.ode_tol, 1);
                     absdF[bi][j] = std::abs(md.dF);
                 },
                 cfg.workers);

    // Seeds: both endpoint nodes of every band plus strict local minima of |F'|
    std::vector<cplx> seeds;
    std::vector<int> seed_band;
    for (int bi = 0; bi < m; ++bi) {
        const auto& s = curves[std::size_t(bi)].samples;
        const auto& d = absdF[std::size_t(bi)];
        auto push = [&](int j) {
            seeds.push_back(s[std::size_t(j)].lambda);
            seed_band.push_back(curves[std::size_t(bi)].n);
        };
        push(0);
        push(G - 1);
        for (int j = 1; j + 1 < G; ++j)
            if (d[std::size_t(j)] < d[std::size_t(j - 1)] && d[std::size_t(j)] <= d[std::size_t(j + 1)])
                push(j);
    }

    std::vector<RefinedCritical> rc(seeds.size());
    parallel_for(seeds.size(),
                 [&](std::size_t i) {
                     rc[i] = refine_critical(p, seeds[i], cfg.ode_tol,
                                             std::max(cfg.newton_maxiter, 8));
                 },
                 cfg.workers);

    // Deduplicate converged critical points in seed order
    std::vector<std::size_t> reps;
    for (std::size_t i = 0; i < rc.size(); ++i) {
        if (!rc[i].converged) {
            rep.log.push_back("critical-point refinement did not converge from seed near lambda=" +
                              fmt_cplx(seeds[i]) + " (band " + std::to_string(seed_band[i]) + ")");
            continue;
        }
        bool dup = false;
        for (std::size_t r : reps)
            if (std::abs(rc[i].lambda - rc[r].lambda) <= 1e-8 * (1.0 + std::abs(rc[r].lambda))) {
                dup = true;
                break;
            }
        if (!dup) reps.push_back(i);
    }

    constexpr double eps_t = 1e-4;   // |F| within 2 - O(eps_t^2) counts as interior
    for (std::size_t ri : reps) {
        const auto& r = rc[ri];
        const cplx F = r.md.F;
        const double imF = std::abs(F.imag());
        const double reF = std::abs(F.real());
        if (imF > cfg.membership_tol || reF > 2.0 + cfg.membership_tol) continue;   // off spectrum
        SingularityCandidate c;
        c.lambda = r.lambda;
        c.F_residual = imF + std::max(0.0, reF - 2.0);
        c.Fprime_residual = std::abs(r.md.dF);
        c.t = std::acos(std::clamp(F.real() / 2.0, -1.0, 1.0));
        if (c.t <= eps_t || c.t >= PI - eps_t) {
            const cplx rhs = (c.t <= eps_t) ? cplx(2.0) : cplx(-2.0);
            c.t = (c.t <= eps_t) ? 0.0 : PI;
            // Distinguish a genuine multiple endpoint eigenvalue from a
            // critical point sitting strictly inside a narrowly open gap
            // (where |F| - 2 can be below the membership tolerance): the
            // root of F = +-2 refined from lambda must come back multiple
            // and essentially in place, otherwise the gap is open and the
            // critical point is not an eigenvalue at all.
            const auto rr = refine_discriminant_root(p, r.lambda, rhs, cfg.newton_tol,
                                                     cfg.newton_maxiter, cfg.ode_tol);
            if (!rr.converged) {
                rep.log.push_back("endpoint candidate near lambda=" + fmt_cplx(r.lambda) +
                                  ": root refinement against F = " + fmt_num(rhs.real()) +
                                  " did not converge");
                continue;
            }
            if (rr.multiplicity < 2 ||
                std::abs(rr.lambda - r.lambda) > 1e-6 * (1.0 + std::abs(r.lambda)))
                continue;   // open-gap critical point
            const auto mde = fundamental_at_one(p, rr.lambda, cfg.ode_tol, 0);
            const double deg = endpoint_degeneracy_tol(rr.lambda);
            const bool semi = std::abs(mde.phi1) < deg && std::abs(mde.dtheta1) < deg;
            c.kind = semi ? SingularityKind::EndpointSemisimple : SingularityKind::EndpointJordan;
        } else {
            c.kind = SingularityKind::InteriorMultiple;
        }
        // Band membership: the candidate lies on curve n when it comes within
        // the curve's local sample spacing of some sample.
        for (int bi = 0; bi < m; ++bi) {
            const auto& s = curves[std::size_t(bi)].samples;
            double bestd = std::numeric_limits<double>::infinity();
            int bj = 0;
            for (int j = 0; j < G; ++j) {
                const double dd = std::abs(s[std::size_t(j)].lambda - c.lambda);
                if (dd < bestd) {
                    bestd = dd;
                    bj = j;
                }
            }
            double spacing = 0.0;
            if (bj > 0)
                spacing = std::max(spacing,
                                   std::abs(s[std::size_t(bj)].lambda - s[std::size_t(bj - 1)].lambda));
            if (bj + 1 < G)
                spacing = std::max(spacing,
                                   std::abs(s[std::size_t(bj + 1)].lambda - s[std::size_t(bj)].lambda));
            if (bestd <= std::max(1e-6 * (1.0 + std::abs(c.lambda)), 0.75 * spacing))
                c.bands.push_back(curves[std::size_t(bi)].n);
        }
        std::sort(c.bands.begin(), c.bands.end());
        rep.candidates.push_back(std::move(c));
    }

    std::sort(rep.candidates.begin(), rep.candidates.end(),
              [](const SingularityCandidate& a, const SingularityCandidate& b) {
                  if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
                  return a.lambda.imag() < b.lambda.imag();
              });

    std::set<int> singular_bands;
    for (const auto& c : rep.candidates) {
        if (c.kind == SingularityKind::EndpointSemisimple) continue;
        ++rep.s;
        singular_bands.insert(c.bands.begin(), c.bands.end());
        if (c.kind == SingularityKind::InteriorMultiple) {
            ++rep.m;
            rep.exclusion_t.push_back(c.t);
        }
    }
    rep.S.assign(singular_bands.begin(), singular_bands.end());
    std::sort(rep.exclusion_t.begin(), rep.exclusion_t.end());
    rep.exclusion_t.erase(std::unique(rep.exclusion_t.begin(), rep.exclusion_t.end(),
                                      [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                          rep.exclusion_t.end());
    return rep;
}

MultiplicityInfo multiplicity_at(const FourierPotential& p, cplx lambda, double t,
                                 double ode_tol) {
    if (!finite(lambda) || !std::isfinite(t))
        throw NonFiniteInput("multiplicity_at: lambda and t must be finite");
    const auto md = fundamental_at_one(p, lambda, ode_tol, 2);
    const cplx rhs = 2.0 * std::cos(t);
    if (std::abs(md.F - rhs) > 1e-6 * (1.0 + std::abs(rhs)))
        throw NotAnEigenvalue("multiplicity_at: F(lambda) = " + fmt_cplx(md.F) +
                              " does not match 2 cos t = " + fmt_cplx(rhs));
    MultiplicityInfo mi;
    const double tol1 = multiple_root_tolerance(lambda);
    const double tol2 = 1e-6 / (1.0 + std::abs(lambda));
    if (std::abs(md.dF) >= tol1)
        mi.algebraic = 1;
    else
        mi.algebraic = (std::abs(md.d2F) >= tol2) ? 2 : 3;
    mi.geometric = 1;
    const bool endpoint = std::abs(t) <= 1e-9 || std::abs(std::abs(t) - PI) <= 1e-9;
    if (endpoint) {
        const double deg = endpoint_degeneracy_tol(lambda);
        if (std::abs(md.phi1) < deg && std::abs(md.dtheta1) < deg) mi.geometric = 2;
    }
    return mi;
}

SpectralityDiagnostic spectrality_diagnostic(const FourierPotential& p,
                                             const TrackingConfig& cfg) {
    validate(cfg);
    SpectralityDiagnostic d;
    d.N_used = seed_threshold(p);
    if (cfg.nmax <= d.N_used) {
        d.overall = Verdict::Inconclusive;
        d.notes.push_back("band range |n| <= " + std::to_string(cfg.nmax) +
                          " does not extend beyond the seeding threshold " +
                          std::to_string(d.N_used) + "; asymptotic criteria are not testable");
        return d;
    }

    const auto rep = find_singularities(p, cfg);
    bool witness = false;   // any singular point refutes spectrality outright
    for (const auto& c : rep.candidates) {
        if (c.kind == SingularityKind::EndpointSemisimple) continue;
        witness = true;
        bool tail = false;
        for (int n : c.bands)
            if (std::abs(n) > d.N_used) tail = true;
        if (!tail) {
            // a singular point on a low band leaves the asymptotic items
            // intact, but the operator cannot be spectral with it present
            d.notes.push_back("singular point at lambda=" + fmt_cplx(c.lambda) + ", t=" +
                              fmt_num(c.t) + " on low bands");
            continue;
        }
        d.tail_singularity_free = false;
        if (c.kind == SingularityKind::InteriorMultiple) {
            d.interior_simple = false;
            d.notes.push_back("multiple eigenvalue at lambda=" + fmt_cplx(c.lambda) +
                              ", t=" + fmt_num(c.t));
        } else {
            d.endpoint_semisimple = false;
            d.notes.push_back("one-dimensional eigenspace at the multiple endpoint eigenvalue "
                              "lambda=" + fmt_cplx(c.lambda) + ", t=" + fmt_num(c.t));
        }
    }

    // Projection-norm profiles over the asymptotic window N_used < |n| <= nmax
    const int G2 = std::max(16, cfg.tgrid / 4);
    std::vector<int> ks;
    for (int k = d.N_used + 1; k <= cfg.nmax; ++k) ks.push_back(k);
    std::vector<double> bk(ks.size(), 0.0);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        double b = 0.0;
        for (int sgn : {+1, -1}) {
            const int n = sgn * ks[i];
            const auto prof = alpha_profile(p, n, G2, cfg, 128);
            for (const auto& smp : prof) {
                if (!smp.ok) {
                    d.interior_simple = false;
                    d.tail_singularity_free = false;
                    d.notes.push_back("multiple eigenvalue on band " + std::to_string(n) +
                                      " near t=" + fmt_num(smp.t));
                    continue;
                }
                b = std::max(b, 1.0 / std::abs(smp.alpha));
            }
        }
        bk[i] = b;
    }
    d.sup_proj_norm = *std::max_element(bk.begin(), bk.end());
    d.bound_d = d.sup_proj_norm;

    const std::size_t L = bk.size();
    if (L >= 3) {
        const std::size_t am =
            std::size_t(std::max_element(bk.begin(), bk.end()) - bk.begin());
        const double mn = *std::min_element(bk.begin(), bk.end());
        d.edge_growth = am == L - 1 && bk[L - 1] > bk[L - 2] && bk[L - 2] > bk[L - 3] &&
                        bk[L - 1] >= 2.0 * std::max(mn, 1.0);
    }
    d.proj_norm_bounded = !d.edge_growth;
    if (d.edge_growth)
        d.notes.push_back("projection norms rise toward the edge of the computed range: sup " +
                          fmt_num(d.sup_proj_norm) + " attained at |n| = " +
                          std::to_string(cfg.nmax));

    if (witness || !d.tail_singularity_free || !d.interior_simple || !d.endpoint_semisimple)
        d.overall = Verdict::Inconsistent;
    else if (!d.proj_norm_bounded)
        d.overall = Verdict::Inconclusive;
    else
        d.overall = Verdict::Consistent;
    return d;
}

PhaseConditionResult phase_condition_check(cplx a, cplx b, long long Q) {
    if (!finite(a) || !finite(b))
        throw NonFiniteInput("phase condition: coefficients must be finite");
    if (a == cplx(0.0) || b == cplx(0.0))
        throw ZeroProduct("phase condition: both harmonic coefficients must be nonzero");
    if (Q < 100) throw BadConfig("phase condition: search bound Q >= 100 required");

    PhaseConditionResult r;
    r.alpha = std::arg(a * b) / PI;
    const double fail_tol = 1e-9;

    const auto scan = [&](double mult, double& mn, long long& q_at, long long& p_at) {
        mn = std::numeric_limits<double>::infinity();
        for (long long q = 1; q <= Q; ++q) {
            const double x = mult * double(q) * r.alpha;
            long long pp = std::llround((x + 1.0) * 0.5);
            if (pp < 1) pp = 1;
            const double dist = std::abs(x - double(2 * pp - 1));
            if (dist < mn) {
                mn = dist;
                q_at = q;
                p_at = pp;
            }
        }
    };
    scan(1.0, r.min_primary, r.q_primary, r.p_primary);
    scan(2.0, r.min_doubled, r.q_doubled, r.p_doubled);

    // Rational reconstruction of alpha by continued-fraction convergents with
    // denominator <= Q.
    long long num = 0, den = 0;
    {
        const double x = r.alpha;
        long long h0 = 1, k0 = 0;
        long long h1 = static_cast<long long>(std::floor(x)), k1 = 1;
        double frac = x - std::floor(x);
        for (int it = 0; it < 64; ++it) {
            if (std::abs(double(k1) * x - double(h1)) < fail_tol) break;
            if (frac < 1e-15) break;
            const double y = 1.0 / frac;
            const double fl = std::floor(y);
            if (fl >= 9.0e18) break;
            const long long ai = static_cast<long long>(fl);
            if (ai > (4 * Q) / k1 + 2) break;   // next denominator would blow past Q
            const long long h2 = ai * h1 + h0;
            const long long k2 = ai * k1 + k0;
            if (k2 > Q) break;
            h0 = h1;
            k0 = k1;
            h1 = h2;
            k1 = k2;
            frac = y - fl;
        }
        if (k1 >= 1 && std::abs(double(k1) * x - double(h1)) < fail_tol) {
            num = h1;
            den = k1;
            const long long g = std::gcd(num < 0 ? -num : num, den);
            if (g > 1) {
                num /= g;
                den /= g;
            }
        }
    }

    const auto frac_str = [&] { return std::to_string(num) + "/" + std::to_string(den); };
    if (r.min_primary < fail_tol) {
        r.verdict = ConditionVerdict::Fails;
        r.note = "witness q=" + std::to_string(r.q_primary) + ", p=" +
                 std::to_string(r.p_primary) + ": |q alpha - (2p-1)| = " + fmt_num(r.min_primary);
    } else if (den >= 1 && (num <= 0 || num % 2 == 0)) {
        r.verdict = ConditionVerdict::Holds;
        r.certificate = true;
        r.cert_num = num;
        r.cert_den = den;
        r.note = num <= 0 ? "alpha = " + frac_str() +
                                " <= 0, so every |q alpha - (2p-1)| is at least 1"
                          : "alpha = " + frac_str() +
                                " with even numerator: the distance is bounded below by 1/" +
                                std::to_string(den);
    } else if (den >= 1) {
        r.verdict = ConditionVerdict::Borderline;
        r.cert_num = num;
        r.cert_den = den;
        r.note = "alpha is close to " + frac_str() +
                 " (odd numerator) but the scan minimum is " + fmt_num(r.min_primary);
    } else {
        r.verdict = ConditionVerdict::Borderline;
        r.note = "no rational structure with denominator <= " + std::to_string(Q) +
                 " detected; scan minimum " + fmt_num(r.min_primary);
    }
    return r;
}

CoefficientConditionResult coefficient_condition_check(const FourierPotential& p,
                                                       const CoefficientConditionParams& prm,
                                                       const std::vector<int>& nrange) {
    if (!(prm.c > 0.0) || !(prm.eps > 0.0) || !(prm.ratio_cap >= 1.0) ||
        !std::isfinite(prm.c) || !std::isfinite(prm.eps) || !std::isfinite(prm.ratio_cap))
        throw BadConfig("coefficient condition: need c > 0, eps > 0, ratio_cap >= 1");
    CoefficientConditionResult res;
    res.holds = true;
    for (int n : nrange) {
        if (n < 1) throw BadConfig("coefficient condition: indices must be >= 1");
        const cplx qn = p.coeff(n);
        const cplx qmn = p.coeff(-n);
        if (qn == cplx(0.0) || qmn == cplx(0.0))
            throw ZeroCoefficient("coefficient condition: q_{" +
                                  std::to_string(qn == cplx(0.0) ? n : -n) + "} = 0");
        CoefficientConditionRow row;
        row.n = n;
        const double an = std::abs(qn);
        const double amn = std::abs(qmn);
        row.abs_qn = an;
        row.ratio = std::max(an / amn, amn / an);
        row.lower = prm.c * std::pow(double(n), double(-prm.s - 1));
        row.product = qn * qmn;
        row.ratio_ok = row.ratio <= prm.ratio_cap;
        row.size_ok = an > row.lower;
        row.sign_ok = row.product.real() >= 0.0 ||
                      std::abs(row.product.imag()) >= prm.eps * std::abs(row.product);
        const bool ok = row.ratio_ok && row.size_ok && row.sign_ok;
        if (!ok && res.holds) {
            res.holds = false;
            res.first_violation = n;
        }
        res.rows.push_back(row);
    }
    return res;
}

} // namespace hill
