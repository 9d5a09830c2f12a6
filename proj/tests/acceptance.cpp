// Acceptance gate: ten end-to-end criteria, one PASS/FAIL line each.
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "hill/diagnostics.hpp"
#include "hill/expansion.hpp"
#include "hill/floquet.hpp"
#include "hill/galerkin.hpp"
#include "hill/io.hpp"
#include "hill/monodromy.hpp"
#include "hill/potential.hpp"
#include "hill/spectrum.hpp"
#include "hill/types.hpp"

using hill::cplx;
using hill::FourierPotential;
using hill::PI;
using hill::TWO_PI;

namespace {

struct Violation {
    std::string what;
};

void require(bool cond, const std::string& msg) {
    if (!cond) throw Violation{msg};
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// The named test potentials exercised throughout the suite.
std::vector<std::pair<std::string, FourierPotential>> test_potentials() {
    return {
        {"zero", FourierPotential::zero()},
        {"cos(0.3)", FourierPotential::mathieu(0.3)},
        {"cos(0.5i)", FourierPotential::mathieu(cplx(0.0, 0.5))},
        {"cos(0.4 e^{i pi/8})", FourierPotential::mathieu(std::polar(0.4, PI / 8.0))},
        {"pair(1,-1)", FourierPotential::two_term(1.0, -1.0)},
    };
}

// --------------------------------------------------------------------------
// 1. free-operator exactness
// --------------------------------------------------------------------------
void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto z = FourierPotential::zero();

    hill::TrackingConfig cfg;
    cfg.nmax = 20;
    for (double t : {0.1, 0.5, 1.0, 2.0, 3.0}) {
        const auto evs = hill::eigenvalues_at(z, t, cfg);
        require(evs.size() == 41, "expected 41 fiber eigenvalues at t=" + fmt(t));
        for (const auto& ev : evs) {
            const double base = (TWO_PI * ev.n + t) * (TWO_PI * ev.n + t);
            require(std::abs(ev.lambda - base) <= 1e-8 * (1.0 + base),
                    "fiber eigenvalue off lattice at n=" + std::to_string(ev.n) +
                        ", t=" + fmt(t));
        }
    }

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mag(0.0, 4.0), ang(-PI, PI);
    for (int i = 0; i < 200; ++i) {
        const cplx lam = std::polar(std::pow(10.0, mag(rng)), ang(rng));
        const cplx ref = 2.0 * std::cos(std::sqrt(lam));
        const cplx got = hill::discriminant(z, lam, 1e-13);
        require(std::abs(got - ref) <= 1e-10 * std::max(1.0, std::abs(ref)),
                "trace mismatch at lambda=" + fmt(lam.real()) + "+" + fmt(lam.imag()) + "i");
    }
    require(elapsed_since(t0) < 10.0, "runtime budget of 10 s exceeded");
}

// --------------------------------------------------------------------------
// 2. cross-method agreement of the two eigenvalue routes
// --------------------------------------------------------------------------
void criterion2() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<cplx> amps{0.3, cplx(0.0, 0.5), std::polar(0.4, PI / 8.0)};
    for (const cplx a : amps) {
        const auto p = FourierPotential::mathieu(a);
        for (double t : {0.5, 1.0, 2.5}) {
            const auto pairs = hill::galerkin_eigen(p, t, 32);
            for (int n = -5; n <= 5; ++n) {
                const cplx lam_matrix = pairs[std::size_t(hill::zigzag_position(n))].lambda;
                const cplx lam_root = hill::bloch_eigenvalue(p, n, t).lambda;
                require(std::abs(lam_matrix - lam_root) <= 1e-6 * (1.0 + std::abs(lam_root)),
                        "matrix/root mismatch at n=" + std::to_string(n) + ", t=" + fmt(t));
            }
        }
    }
    require(elapsed_since(t0) < 30.0, "runtime budget of 30 s exceeded");
}

// --------------------------------------------------------------------------
// 3. Wronskian defect and variational derivative on random inputs
// --------------------------------------------------------------------------
void criterion3() {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> coef(-1.0, 1.0), lamre(-50.0, 2000.0),
        lamim(-60.0, 60.0);
    std::uniform_int_distribution<int> order(1, 3);
    double worst_wronskian = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::map<int, cplx> q;
        const int K = order(rng);
        for (int n = 1; n <= K; ++n) {
            q[n] = cplx(coef(rng), coef(rng));
            q[-n] = cplx(coef(rng), coef(rng));
        }
        const auto p = FourierPotential::from_fourier(q);
        const cplx lam(lamre(rng), lamim(rng));

        const auto md = hill::fundamental_at_one(p, lam, 1e-12, 1);
        worst_wronskian = std::max(worst_wronskian, md.wronskian_defect);

        const double h = 1e-5 * (1.0 + std::abs(lam));
        const cplx fd = (hill::discriminant(p, lam + h, 1e-12) -
                         hill::discriminant(p, lam - h, 1e-12)) /
                        (2.0 * h);
        require(std::abs(md.dF - fd) <= 1e-6 * std::max(1.0, std::abs(md.dF)),
                "derivative mismatch on trial " + std::to_string(trial));
    }
    require(worst_wronskian < 1e-8,
            "max Wronskian defect " + fmt(worst_wronskian) + " over 100 integrations");
}

// --------------------------------------------------------------------------
// 4. band velocity identity  dlambda/dt * F'(lambda) = -2 sin t
// --------------------------------------------------------------------------
void criterion4() {
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<int> band(-6, 6);
    std::uniform_real_distribution<double> tdist(0.2, 2.9);
    const double h = 1e-5;
    for (const auto& [name, p] : test_potentials()) {
        for (int trial = 0; trial < 50; ++trial) {
            const int n = band(rng);
            const double t = tdist(rng);
            const cplx lam = hill::bloch_eigenvalue(p, n, t).lambda;
            const cplx dlam = (hill::bloch_eigenvalue(p, n, t + h).lambda -
                               hill::bloch_eigenvalue(p, n, t - h).lambda) /
                              (2.0 * h);
            const cplx dF = hill::discriminant_derivative(p, lam, 1e-12);
            const double rhs = -2.0 * std::sin(t);
            require(std::abs(dlam * dF - rhs) <= 1e-6 * std::max(1.0, std::abs(rhs)),
                    "velocity identity violated for " + name + " at n=" + std::to_string(n) +
                        ", t=" + fmt(t));
        }
    }
}

// --------------------------------------------------------------------------
// 5. self-adjoint collapse: unimodular pairings and empty singular set
// --------------------------------------------------------------------------
void criterion5() {
    for (double a : {0.2, 0.4}) {
        const auto p = FourierPotential::mathieu(a);
        for (int n = -6; n <= 6; ++n) {
            const auto prof = hill::alpha_profile(p, n, 64);
            require(prof.size() == 64, "expected 64 profile samples");
            for (const auto& s : prof) {
                require(s.ok, "pairing undefined on a real potential at n=" +
                                  std::to_string(n) + ", t=" + fmt(s.t));
                require(std::abs(std::abs(s.alpha) - 1.0) < 1e-6,
                        "| |alpha| - 1 | >= 1e-6 at n=" + std::to_string(n) +
                            ", t=" + fmt(s.t) + " (a=" + fmt(a) + ")");
            }
        }
        hill::TrackingConfig cfg;
        cfg.nmax = 6;
        cfg.tgrid = 64;
        const auto rep = hill::find_singularities(p, cfg);
        require(rep.S.empty(), "singular band set should be empty for a=" + fmt(a));
        require(rep.s == 0, "no singular points expected for a=" + fmt(a));
    }
}

// --------------------------------------------------------------------------
// 6. lattice separation inequality along the computed bands
// --------------------------------------------------------------------------
void criterion6() {
    for (const auto& [name, p] : test_potentials()) {
        hill::TrackingConfig cfg;
        cfg.nmax = 20;
        cfg.tgrid = 64;
        const auto curves = hill::track_bands(p, cfg);
        int checked = 0;
        for (const auto& curve : curves) {
            const int n = curve.n;
            if (n < 5 || n > 20) continue;
            ++checked;
            for (const auto& s : curve.samples) {
                for (int k = -40; k <= 40; ++k) {
                    if (k == n || k == -n || k == n + 1 || k == -(n + 1)) continue;
                    const double lower = double(std::abs(n - k)) * double(std::abs(n + k));
                    const double dp = TWO_PI * k + s.t;
                    const double dm = TWO_PI * k - s.t;
                    require(std::abs(s.lambda - dp * dp) >= lower &&
                                std::abs(s.lambda - dm * dm) >= lower,
                            "separation violated for " + name + " at n=" + std::to_string(n) +
                                ", k=" + std::to_string(k) + ", t=" + fmt(s.t));
                }
            }
        }
        require(checked == 16, "expected bands n = 5..20 for " + name);
    }
}

// --------------------------------------------------------------------------
// 7. arithmetic phase condition: analytic cases and certificate agreement
// --------------------------------------------------------------------------
void criterion7() {
    const auto t0 = std::chrono::steady_clock::now();
    const long long Q = 10000;

    const auto zero_case = hill::phase_condition_check(1.0, 1.0, Q);
    require(zero_case.verdict == hill::ConditionVerdict::Holds, "alpha=0 must hold");
    require(zero_case.min_primary == 1.0, "alpha=0 minimum must be exactly 1");

    const auto one_case = hill::phase_condition_check(1.0, -1.0, Q);
    require(one_case.verdict == hill::ConditionVerdict::Fails, "alpha=1 must fail");
    require(one_case.q_primary == 1, "alpha=1 must fail at q=1");
    require(one_case.min_primary < 1e-12, "alpha=1 minimum must vanish");

    const auto half_case = hill::phase_condition_check(1.0, cplx(0.0, 1.0), Q);
    require(half_case.verdict == hill::ConditionVerdict::Fails, "alpha=1/2 must fail");
    require(half_case.q_primary == 2, "alpha=1/2 must fail at q=2");
    require(half_case.min_primary < 1e-12, "alpha=1/2 minimum must vanish");

    std::mt19937_64 rng(77);
    std::uniform_int_distribution<long long> dens(1, 50);
    for (int trial = 0; trial < 50; ++trial) {
        const long long den0 = dens(rng);
        std::uniform_int_distribution<long long> nums(-(den0 - 1), den0);
        long long num0 = nums(rng);
        if (num0 == 0) num0 = den0;   // alpha = 1, odd case
        const long long g = std::gcd(num0 < 0 ? -num0 : num0, den0);
        const long long num = num0 / g, den = den0 / g;
        const bool expect_holds = (num <= 0) || (num % 2 == 0);

        const auto r = hill::phase_condition_check(1.0, std::polar(1.0, PI * double(num) / double(den)), Q);
        if (expect_holds) {
            require(r.verdict == hill::ConditionVerdict::Holds,
                    "certificate disagrees with scan (should hold) for alpha=" +
                        std::to_string(num) + "/" + std::to_string(den));
            require(r.certificate && r.cert_num == num && r.cert_den == den,
                    "recovered fraction mismatch for alpha=" + std::to_string(num) + "/" +
                        std::to_string(den));
            require(r.min_primary > 1e-9, "scan minimum should be positive for alpha=" +
                                              std::to_string(num) + "/" + std::to_string(den));
        } else {
            require(r.verdict == hill::ConditionVerdict::Fails,
                    "certificate disagrees with scan (should fail) for alpha=" +
                        std::to_string(num) + "/" + std::to_string(den));
            require(r.min_primary < 1e-9, "scan should find a vanishing witness for alpha=" +
                                              std::to_string(num) + "/" + std::to_string(den));
        }
    }
    require(elapsed_since(t0) < 5.0, "runtime budget of 5 s exceeded");
}

// --------------------------------------------------------------------------
// 8. mass conservation through the cell transform
// --------------------------------------------------------------------------
void criterion8() {
    using hill::TestFunction;
    const std::vector<std::pair<std::string, TestFunction>> fns{
        {"bump(-0.4,0.7)", TestFunction::bump(-0.4, 0.7)},
        {"bump(2,3.5)", TestFunction::bump(2.0, 3.5)},
        {"bump(-3,-1)", TestFunction::bump(-3.0, -1.0)},
        {"modulated(-1.3,2.4)", TestFunction::modulated_bump(-1.3, 2.4, 5.0)},
        {"bump(0.1,0.9)*c", TestFunction::bump(0.1, 0.9, cplx(0.7, 0.4))},
    };
    for (const auto& [name, f] : fns) {
        const double ratio = hill::parseval_check(f);
        require(std::abs(ratio - 1.0) < 1e-6,
                "mass ratio " + fmt(ratio) + " for " + name);
    }
}

// --------------------------------------------------------------------------
// 9. reconstruction quality and two-route agreement
// --------------------------------------------------------------------------
void criterion9() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto f = hill::TestFunction::bump(-0.4, 0.7);

    {   // free operator at full resolution: tight error and route agreement
        hill::ExpansionConfig cfg;
        cfg.nmax = 30;
        cfg.tgrid = 512;
        const auto rep = hill::reconstruct_direct(FourierPotential::zero(), f, cfg);
        require(rep.rel_l2_error < 1e-3,
                "free-operator reconstruction error " + fmt(rep.rel_l2_error));
        require(rep.cross_error < 1e-6,
                "route disagreement " + fmt(rep.cross_error) + " for the free operator");
    }

    for (const cplx a : {cplx(0.2, 0.0), std::polar(0.2, PI / 8.0)}) {
        const auto p = FourierPotential::mathieu(a);
        const std::string name = "cosine amplitude (" + fmt(a.real()) + "," + fmt(a.imag()) + ")";

        hill::ExpansionConfig base;
        base.nmax = 10;
        base.tgrid = 256;

        const auto direct = hill::reconstruct_direct(p, f, base);
        require(direct.cross_error < 1e-3,
                "route disagreement " + fmt(direct.cross_error) + " for " + name);

        const double errA = hill::reconstruct_bloch(p, f, base).rel_l2_error;

        auto doubled_nmax = base;
        doubled_nmax.nmax = 20;
        const double errB = hill::reconstruct_bloch(p, f, doubled_nmax).rel_l2_error;
        require(errB < errA * 1.1,
                "error grew by more than 10% under band-window doubling for " + name +
                    " (" + fmt(errA) + " -> " + fmt(errB) + ")");

        auto doubled_tgrid = base;
        doubled_tgrid.tgrid = 512;
        const double errC = hill::reconstruct_bloch(p, f, doubled_tgrid).rel_l2_error;
        require(errC < errA * 1.1,
                "error grew by more than 10% under quadrature doubling for " + name +
                    " (" + fmt(errA) + " -> " + fmt(errC) + ")");
    }
    require(elapsed_since(t0) < 300.0, "runtime budget of 5 min exceeded");
}

// --------------------------------------------------------------------------
// 10. bitwise determinism across reruns and worker-pool sizes
// --------------------------------------------------------------------------
void criterion10() {
    const auto p = FourierPotential::mathieu(cplx(0.0, 0.3));

    auto bands_bytes = [&](int workers) {
        hill::TrackingConfig cfg;
        cfg.nmax = 4;
        cfg.tgrid = 64;
        cfg.workers = workers;
        hill::BandsFile bf;
        bf.potential = p;
        bf.config = cfg;
        bf.bands = hill::track_bands(p, cfg);
        return hill::bands_to_json(bf);
    };
    const std::string b1 = bands_bytes(1);
    require(b1 == bands_bytes(1), "band archive differs between identical runs");
    require(b1 == bands_bytes(4), "band archive depends on the worker-pool size");

    auto sing_bytes = [&](int workers) {
        hill::TrackingConfig cfg;
        cfg.nmax = 4;
        cfg.tgrid = 64;
        cfg.workers = workers;
        return hill::singularity_report_to_json(hill::find_singularities(p, cfg));
    };
    const std::string s1 = sing_bytes(1);
    require(s1 == sing_bytes(1), "singularity report differs between identical runs");
    require(s1 == sing_bytes(4), "singularity report depends on the worker-pool size");

    const auto f = hill::TestFunction::bump(-0.4, 0.7);
    auto recon_bytes = [&](int workers, bool direct) {
        hill::ExpansionConfig cfg;
        cfg.nmax = 3;
        cfg.tgrid = 64;
        cfg.xquad = 64;
        cfg.a = -1.0;
        cfg.b = 1.0;
        cfg.workers = workers;
        const auto rep = direct ? hill::reconstruct_direct(p, f, cfg)
                                : hill::reconstruct_bloch(p, f, cfg);
        return hill::reconstruction_to_json(rep);
    };
    const std::string r1 = recon_bytes(1, false);
    require(r1 == recon_bytes(1, false), "reconstruction differs between identical runs");
    require(r1 == recon_bytes(4, false), "reconstruction depends on the worker-pool size");
    const std::string d1 = recon_bytes(1, true);
    require(d1 == recon_bytes(4, true), "route-referee reconstruction depends on the pool size");
}

} // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        std::function<void()> body;
    };
    const std::vector<Entry> entries{
        {1, "free-operator exactness", criterion1},
        {2, "matrix vs root-tracking eigenvalues", criterion2},
        {3, "Wronskian and variational derivative", criterion3},
        {4, "band velocity identity", criterion4},
        {5, "self-adjoint collapse", criterion5},
        {6, "lattice separation inequality", criterion6},
        {7, "arithmetic phase condition", criterion7},
        {8, "mass conservation", criterion8},
        {9, "reconstruction and route agreement", criterion9},
        {10, "bitwise determinism", criterion10},
    };

    int failures = 0;
    for (const auto& e : entries) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string message;
        try {
            e.body();
        } catch (const Violation& v) {
            message = v.what;
        } catch (const std::exception& ex) {
            message = std::string("unexpected error: ") + ex.what();
        }
        const double secs = elapsed_since(t0);
        if (message.empty()) {
            std::printf("PASS  criterion %2d: %-40s (%.1fs)\n", e.id, e.name, secs);
        } else {
            ++failures;
            std::printf("FAIL  criterion %2d: %-40s (%.1fs)  %s\n", e.id, e.name, secs,
                        message.c_str());
        }
        std::fflush(stdout);
    }
    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
