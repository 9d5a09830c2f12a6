// Tests for the expansion module: cell transform, fiber coefficients,
// Parseval ratio, and the two reconstruction routes (eigenprojection form
// and lambda-plane form) including their cross-validation.
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>

#include "hill/expansion.hpp"
#include "hill/potential.hpp"

using namespace hill;

namespace {

bool near_rel(double a, double b, double eps) {
    return std::abs(a - b) <= eps * std::max({1.0, std::abs(a), std::abs(b)});
}

bool near_abs(cplx a, cplx b, double eps) { return std::abs(a - b) <= eps; }

ExpansionConfig quick_cfg() {
    ExpansionConfig cfg;
    cfg.nmax = 10;
    cfg.tgrid = 128;
    cfg.xquad = 128;
    return cfg;
}

} // namespace

TEST_CASE("test functions: supports, modulation, splines, L2 norms") {
    auto f = TestFunction::bump(-1.0, 1.0);
    CHECK(f.lo() == -1.0);
    CHECK(f.hi() == 1.0);
    CHECK(f(0.0) == cplx(1.0));          // normalized peak
    CHECK(f(-1.0) == cplx(0.0));
    CHECK(f(1.5) == cplx(0.0));          // outside support
    CHECK(f(-2.0) == cplx(0.0));
    CHECK(std::abs(f(0.5)) > 0.1);
    CHECK(std::abs(f(0.5) - f(-0.5)) == 0.0);   // even about the center

    auto g = TestFunction::bump(2.0, 5.0, cplx(0.0, 2.0));
    CHECK(near_abs(g(3.5), cplx(0.0, 2.0), 1e-15));

    auto m = TestFunction::modulated_bump(-1.0, 1.0, 7.0);
    for (double x : {-0.8, -0.3, 0.1, 0.6})
        CHECK(near_abs(m(x), f(x) * std::polar(1.0, 7.0 * x), 1e-14));

    // L2 norm against a plain Riemann sum
    double brute = 0.0;
    const int N = 200000;
    for (int i = 0; i < N; ++i) {
        const double x = -1.0 + 2.0 * (i + 0.5) / N;
        brute += std::norm(f(x)) * (2.0 / N);
    }
    CHECK(near_rel(f.l2_norm(), std::sqrt(brute), 1e-8));
    CHECK(near_rel(f.l2_norm(), 0.991655591882951, 1e-10));

    // spline interpolation reproduces samples exactly and smooth data well
    std::vector<double> xs;
    std::vector<cplx> vs;
    for (int i = 0; i <= 20; ++i) {
        xs.push_back(-1.0 + 0.1 * i);
        vs.push_back(std::sin(PI * xs.back()));
    }
    auto s = TestFunction::from_samples(xs, vs);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(near_abs(s(xs[i]), vs[i], 1e-12));
    for (double x : {-0.87, -0.14, 0.33, 0.96})
        CHECK(near_abs(s(x), cplx(std::sin(PI * x)), 5e-4));

    CHECK_THROWS_AS(TestFunction::from_samples({0.0, 1.0, 2.0}, {1.0, 2.0, 3.0}), TooFewSamples);
    CHECK_THROWS_AS(
        TestFunction::from_samples({0.0, 1.0, 2.0, 3.0},
                                   {1.0, cplx(std::nan(""), 0.0), 3.0, 4.0}),
        NonFiniteInput);
    CHECK_THROWS_AS(TestFunction::from_samples({0.0, 1.0, 1.0, 3.0}, {1.0, 2.0, 3.0, 4.0}),
                    BadConfig);
}

TEST_CASE("expansion config rejects out-of-contract values") {
    CHECK_NOTHROW(ExpansionConfig{}.validate());
    auto bad = [](auto&& mut) {
        ExpansionConfig c;
        mut(c);
        CHECK_THROWS_AS(c.validate(), BadConfig);
    };
    bad([](ExpansionConfig& c) { c.nmax = 0; });
    bad([](ExpansionConfig& c) { c.tgrid = 32; });
    bad([](ExpansionConfig& c) { c.eps_sing = 0.2; });
    bad([](ExpansionConfig& c) { c.eps_sing = 0.0; });
    bad([](ExpansionConfig& c) { c.xquad = 31; });
    bad([](ExpansionConfig& c) { c.xquad = 30; });
    bad([](ExpansionConfig& c) { c.a = -0.5; });
    bad([](ExpansionConfig& c) { c.b = c.a; });
    bad([](ExpansionConfig& c) { c.a = -10.0; c.b = 10.0; });
    bad([](ExpansionConfig& c) { c.cross_tol_rel = 0.0; });
    bad([](ExpansionConfig& c) { c.ode_tol = -1.0; });
}

TEST_CASE("cell transform: quasiperiodicity, locality, superposition") {
    auto g = TestFunction::bump(-1.3, 1.2);

    // f_t(x + 1) = e^{it} f_t(x)
    for (double t : {0.3, -1.1, 2.9})
        for (double x : {0.13, 0.57, 0.91}) {
            auto v = gelfand_transform(g, t, {x, x + 1.0});
            CHECK(near_abs(v[1], std::polar(1.0, t) * v[0], 1e-13));
        }

    // a single-cell function transforms to itself on its own cell
    auto h = TestFunction::bump(0.1, 0.9);
    for (double t : {0.0, 1.3, -2.2}) {
        auto v = gelfand_transform(h, t, {0.3, 0.55});
        CHECK(v[0] == h(0.3));
        CHECK(v[1] == h(0.55));
    }

    // two integer-shifted copies pick up the factor 1 + e^{-it}
    auto gg = TestFunction(0.1, 1.9, [&h](double x) { return h(x) + h(x - 1.0); });
    for (double t : {0.7, -1.9}) {
        auto v = gelfand_transform(gg, t, {0.5});
        CHECK(near_abs(v[0], h(0.5) * (1.0 + std::polar(1.0, -t)), 1e-13));
    }

    CHECK_THROWS_AS(gelfand_transform(h, 0.5, {std::nan("")}), NonFiniteInput);
}

TEST_CASE("fiber coefficients: exact plane wave, unit normalization, failure modes") {
    ExpansionConfig cfg;

    // free operator: f = e^{i(2 pi 3 + t)x} on one cell has a_3 = 1 and
    // every other window coefficient zero
    auto p0 = FourierPotential::zero();
    const double t = 0.5;
    auto wave =
        TestFunction(0.0, 1.0, [t](double x) { return std::polar(1.0, (TWO_PI * 3 + t) * x); });
    auto cs = coefficients(p0, wave, t, 5, cfg);
    REQUIRE(cs.labels.size() == 11);
    REQUIRE(cs.a.size() == 11);
    REQUIRE(cs.psi.size() == 11);
    REQUIRE(cs.xgrid.size() == static_cast<std::size_t>(cfg.xquad));
    for (std::size_t i = 0; i < cs.labels.size(); ++i) {
        CHECK(near_rel(std::abs(cs.alpha[i]), 1.0, 1e-12));
        if (cs.labels[i] == 3) {
            CHECK(near_abs(cs.a[i], cplx(1.0), 1e-12));
            const double w = TWO_PI * 3 + t;
            CHECK(near_rel(cs.lambda[i].real(), w * w, 1e-10));
            CHECK(std::abs(cs.lambda[i].imag()) < 1e-8);
            // the matching mode is a unimodular wave
            for (int j = 0; j < cfg.xquad; j += 17)
                CHECK(near_rel(std::abs(cs.psi[i][static_cast<std::size_t>(j)]), 1.0, 1e-10));
        } else {
            CHECK(std::abs(cs.a[i]) < 1e-12);
        }
    }

    // small real potential keeps |alpha| = 1 (self-adjoint fiber)
    auto pm = FourierPotential::mathieu(0.2);
    auto f = TestFunction::bump(-1.0, 1.0);
    auto cs2 = coefficients(pm, f, 1.0, 6, cfg);
    for (auto& al : cs2.alpha) CHECK(near_rel(std::abs(al), 1.0, 1e-10));

    CHECK_THROWS_AS(coefficients(p0, f, 0.0, 5, cfg), ExclusionPoint);
    CHECK_THROWS_AS(coefficients(p0, f, PI, 5, cfg), ExclusionPoint);
    CHECK_THROWS_AS(coefficients(p0, f, -PI + 1e-12, 5, cfg), ExclusionPoint);
    CHECK_THROWS_AS(coefficients(p0, f, 5.0, 5, cfg), BadConfig);
    CHECK_THROWS_AS(coefficients(p0, f, 1.0, 0, cfg), BadConfig);

    // at the critical quasimomentum of the two-term potential the window
    // pairing degenerates
    auto p2 = FourierPotential::two_term(1.0, -1.0);
    CHECK_THROWS_AS(coefficients(p2, f, 2.9823609602928958, 5, cfg), MultipleEigenvalue);
}

TEST_CASE("Parseval ratio equals one across supports and modulations") {
    ExpansionConfig cfg;
    const TestFunction fs[] = {
        TestFunction::bump(-1.0, 1.0),
        TestFunction::bump(4.0, 6.5),                    // integer-shifted, multi-cell
        TestFunction::bump(-0.3, 0.4),                   // sub-cell
        TestFunction::modulated_bump(-2.0, 1.0, 11.0),   // oscillatory, three cells
        TestFunction::bump(-3.0, 3.0, cplx(0.5, 1.5)),   // wide, complex amplitude
    };
    for (const auto& f : fs) CHECK(near_rel(parseval_check(f, cfg), 1.0, 1e-9));

    CHECK_THROWS_AS(parseval_check(TestFunction(0.0, 1.0, [](double) { return cplx(0.0); }), cfg),
                    BadConfig);
}

TEST_CASE("projection-form reconstruction: free operator, report structure, determinism") {
    auto p = FourierPotential::zero();
    auto f = TestFunction::bump(-1.0, 1.0);
    auto cfg = quick_cfg();

    auto r = reconstruct_bloch(p, f, cfg);

    // grid layout
    REQUIRE(r.x.size() == static_cast<std::size_t>(4 * cfg.xquad + 1));
    CHECK(r.x.front() == -2.0);
    CHECK(r.x.back() == 2.0);
    CHECK(r.f_values.size() == r.x.size());
    CHECK(r.f_hat.size() == r.x.size());
    for (std::size_t i = 0; i < r.x.size(); i += 97) CHECK(r.f_values[i] == f(r.x[i]));

    // accuracy: truncation-limited at this window size
    CHECK(near_rel(r.rel_l2_error, 8.628672e-05, 1e-4));
    CHECK(near_rel(r.parseval_ratio, 1.0, 1e-9));

    // window ladder: radii fixed by eps_sing, errors shrinking linearly
    REQUIRE(r.eps_ladder.size() == 3);
    CHECK(r.eps_ladder[0] == 1e-2);
    CHECK(r.eps_ladder[1] == 1e-3);
    CHECK(r.eps_ladder[2] == 1e-4);
    REQUIRE(r.rel_error_by_eps.size() == 3);
    CHECK(r.rel_error_by_eps[0] > r.rel_error_by_eps[1]);
    CHECK(r.rel_error_by_eps[1] > r.rel_error_by_eps[2]);
    CHECK(r.rel_error_by_eps[2] > r.rel_l2_error);   // extrapolation helps

    // band bookkeeping: no singular structure for the free operator
    REQUIRE(r.band_labels.size() == 21);
    CHECK(r.band_labels[0] == 0);
    CHECK(r.band_labels[1] == -1);
    CHECK(r.band_labels[2] == 1);
    CHECK(r.grouped_bands.empty());
    CHECK(r.grouped_norm == 0.0);
    CHECK(r.flipped_arcs.empty());
    CHECK(r.cross_error == 0.0);
    REQUIRE(r.coeff_lattice.size() == 21);
    for (auto& row : r.coeff_lattice) CHECK(row.size() == r.t_nodes.size());

    // quadrature nodes avoid the excluded quasimomentum
    double tmin = 10.0;
    for (double t : r.t_nodes) {
        CHECK(std::abs(t) < PI);
        tmin = std::min(tmin, std::abs(t));
    }
    CHECK(tmin >= 0.1 * cfg.eps_sing);

    // the dominant contribution sits in the lowest bands for a smooth bump
    CHECK(r.band_norms[0] > r.band_norms[20]);
    CHECK(r.band_norms[20] < 1e-3);

    // bitwise determinism across reruns and worker pools
    auto r2 = reconstruct_bloch(p, f, cfg);
    CHECK(r.f_hat == r2.f_hat);
    CHECK(r.t_nodes == r2.t_nodes);
    auto cfg4 = cfg;
    cfg4.workers = 4;
    auto r4 = reconstruct_bloch(p, f, cfg4);
    CHECK(r.f_hat == r4.f_hat);
}

TEST_CASE("lambda-plane reconstruction matches the projection form: free operator") {
    auto p = FourierPotential::zero();
    auto f = TestFunction::bump(-1.0, 1.0);
    auto r = reconstruct_direct(p, f, quick_cfg());

    CHECK(near_rel(r.rel_l2_error, 8.628672e-05, 1e-4));
    CHECK(r.cross_error < 1e-10);
    CHECK(r.flipped_arcs.size() == 21);   // every arc settles on the same branch
    REQUIRE(!r.notes.empty());
    bool found = false;
    for (auto& n : r.notes) found = found || n.find("-2 sin t") != std::string::npos;
    CHECK(found);

    // nodes live on (0, pi) away from the excluded endpoint
    for (double t : r.t_nodes) {
        CHECK(t > 0.0);
        CHECK(t < PI);
    }
}

TEST_CASE("lambda-plane reconstruction matches the projection form: real Mathieu") {
    auto p = FourierPotential::mathieu(0.2);
    auto f = TestFunction::bump(-1.0, 1.0);
    auto r = reconstruct_direct(p, f, quick_cfg());
    CHECK(near_rel(r.rel_l2_error, 8.630281813e-05, 1e-4));
    CHECK(r.cross_error < 1e-10);
    CHECK(r.flipped_arcs.size() == 21);
    CHECK(r.grouped_bands.empty());
    CHECK(near_rel(r.parseval_ratio, 1.0, 1e-9));
}

TEST_CASE("lambda-plane reconstruction matches the projection form: subcritical complex Mathieu") {
    auto p = FourierPotential::mathieu(0.2 * std::polar(1.0, PI / 8.0));
    auto f = TestFunction::bump(-1.0, 1.0);
    auto r = reconstruct_direct(p, f, quick_cfg());
    CHECK(near_rel(r.rel_l2_error, 8.630159382e-05, 1e-4));
    CHECK(r.cross_error < 1e-10);
    CHECK(r.grouped_bands.empty());   // no singular bands at this coupling
}

TEST_CASE("singular potential: pooled bands reconstruct through the critical point") {
    auto p = FourierPotential::two_term(1.0, -1.0);
    auto f = TestFunction::bump(-1.0, 1.0);
    auto r = reconstruct_direct(p, f, quick_cfg());

    // the two bands carrying the interior singularity are pooled
    REQUIRE(r.grouped_bands.size() == 2);
    CHECK(r.grouped_bands[0] == -1);
    CHECK(r.grouped_bands[1] == 0);
    CHECK(near_rel(r.grouped_norm, 0.988113223950, 1e-6));
    CHECK(r.band_labels.size() == 19);   // remaining individual arcs

    CHECK(near_rel(r.rel_l2_error, 8.628691832e-05, 1e-4));
    CHECK(r.cross_error < 1e-10);
    CHECK(r.flipped_arcs.size() == 19);
    bool grouped_note = false;
    for (auto& n : r.notes) grouped_note = grouped_note || n.find("grouped") != std::string::npos;
    CHECK(grouped_note);

    // nodes keep clear of both excluded quasimomenta (0 and the critical t)
    const double tstar = 2.9823609602928958;
    for (double t : r.t_nodes) {
        CHECK(std::abs(t) >= 1e-4);
        CHECK(std::abs(t - tstar) >= 1e-4);
    }
    CHECK(near_rel(r.parseval_ratio, 1.0, 1e-9));
}
