#include "doctest.h"

#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <vector>

#include "hill/monodromy.hpp"
#include "hill/potential.hpp"
#include "rk4_oracle.hpp"

using hill::cplx;
using hill::FourierPotential;
using hill::PI;
using hill::TWO_PI;

namespace {

// Closed forms for q = 0: F = 2 cos(sqrt(lambda)), branch-independent.
cplx free_F(cplx lam) { return 2.0 * std::cos(std::sqrt(lam)); }
// dF/dlambda = -sin(sqrt(lambda))/sqrt(lambda), entire (even series).
cplx free_dF(cplx lam) {
    const cplx w = std::sqrt(lam);
    if (std::abs(w) < 1e-8) return -1.0 + lam / 6.0;
    return -std::sin(w) / w;
}

} // namespace

TEST_CASE("free operator: discriminant closed forms at landmark points") {
    auto z = FourierPotential::zero();

    auto md = hill::fundamental_at_one(z, cplx(PI * PI), 1e-12);
    CHECK(std::abs(md.F - cplx(-2.0)) < 1e-10);
    CHECK(std::abs(md.phi1) < 1e-10);            // sin(pi)/pi = 0
    CHECK(std::abs(md.theta1 - cplx(-1.0)) < 1e-10);

    CHECK(std::abs(hill::discriminant(z, cplx(-1.0)) - 2.0 * std::cosh(1.0)) < 1e-10);
    CHECK(std::abs(hill::discriminant(z, cplx(4.0 * PI * PI)) - cplx(2.0)) < 1e-10);
    CHECK(std::abs(hill::discriminant(z, cplx(PI * PI / 4.0))) < 1e-10);
}

TEST_CASE("free operator: F matches 2 cos sqrt(lambda) across the lambda plane") {
    auto z = FourierPotential::zero();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mag(0.0, 4.0), arg(-PI, PI);
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
        const cplx lam = std::polar(std::pow(10.0, mag(rng)), arg(rng));
        const cplx ref = free_F(lam);
        const double rel =
            std::abs(hill::discriminant(z, lam, 1e-13) - ref) / std::max(1.0, std::abs(ref));
        worst = std::max(worst, rel);
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("free operator: variational dF/dlambda matches the closed form") {
    auto z = FourierPotential::zero();
    for (cplx lam : {cplx(PI * PI), cplx(PI * PI / 4.0), cplx(40.0, 13.0), cplx(-9.0, 2.0)}) {
        auto md = hill::fundamental_at_one(z, lam, 1e-12, 1);
        const cplx ref = free_dF(lam);
        CHECK(std::abs(md.dF - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
    }
    // landmark values from the spec of the operator
    CHECK(std::abs(hill::discriminant_derivative(z, cplx(PI * PI), 1e-12)) < 1e-10);
    CHECK(std::abs(hill::discriminant_derivative(z, cplx(PI * PI / 4.0), 1e-12) -
                   cplx(-2.0 / PI)) < 1e-10);
}

TEST_CASE("free operator: second lambda-derivative from the level-2 jet") {
    // d2F/dlambda2 = (sin w / w - cos w) / (2 lambda), w = sqrt(lambda)
    auto z = FourierPotential::zero();
    for (cplx lam : {cplx(3.0), cplx(-5.0, 1.0), cplx(120.0, -40.0)}) {
        auto md = hill::fundamental_at_one(z, lam, 1e-12, 2);
        const cplx w = std::sqrt(lam);
        const cplx ref = (std::sin(w) / w - std::cos(w)) / (2.0 * lam);
        CHECK(std::abs(md.d2F - ref) <= 1e-9 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("cosine potential: frozen regression values, cross-checked by a second integrator") {
    // Values pinned from two independent integration schemes agreeing to ~1e-13.
    auto p = FourierPotential::mathieu(0.5);
    const cplx lam(1.0);

    auto md = hill::fundamental_at_one(p, lam, 1e-12, 1);
    CHECK(std::abs(md.F - cplx(1.0687463443857168)) < 1e-9);
    CHECK(std::abs(md.dF - cplx(-0.84068584006179181)) < 1e-8);
    CHECK(std::abs(hill::discriminant(p, lam, 1e-12) - md.F) < 1e-10);

    // Independent fixed-step RK4 cross-check, computed live.
    auto fd = oracle::rk4_fundamental(p, lam, 40000);
    CHECK(std::abs(md.F - fd.F()) < 1e-9);
    CHECK(std::abs(md.theta1 - fd.theta1) < 1e-9);
    CHECK(std::abs(md.phi1 - fd.phi1) < 1e-9);
    CHECK(std::abs(md.dtheta1 - fd.dtheta1) < 1e-9);
    CHECK(std::abs(md.dphi1 - fd.dphi1) < 1e-9);
}

TEST_CASE("complex potentials: dual-integrator agreement and frozen pins") {
    SUBCASE("imaginary cosine") {
        auto p = FourierPotential::mathieu(cplx(0.0, 0.5));
        const cplx lam(2.0, 0.5);
        auto md = hill::fundamental_at_one(p, lam, 1e-12);
        CHECK(std::abs(md.F - cplx(0.30602651276258291, -0.34929997125519330)) < 1e-9);
        auto fd = oracle::rk4_fundamental(p, lam, 40000);
        CHECK(std::abs(md.F - fd.F()) < 1e-9);
    }
    SUBCASE("asymmetric two-term") {
        auto p = FourierPotential::two_term(cplx(1.0), cplx(0.0, -2.0));
        const cplx lam(-3.0);
        auto md = hill::fundamental_at_one(p, lam, 1e-12);
        CHECK(std::abs(md.F - cplx(5.8291071956794234, 0.12281547123289206)) < 1e-9);
        auto fd = oracle::rk4_fundamental(p, lam, 40000);
        CHECK(std::abs(md.F - fd.F()) < 1e-9);
        CHECK(std::abs(md.theta1 - fd.theta1) < 1e-9);
        CHECK(std::abs(md.phi1 - fd.phi1) < 1e-9);
    }
}

TEST_CASE("variational derivative matches central finite differences") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> coef(-1.0, 1.0), lamre(-30.0, 900.0),
        lamim(-20.0, 20.0);
    for (int trial = 0; trial < 12; ++trial) {
        auto p = FourierPotential::from_fourier({{-2, cplx(coef(rng), coef(rng))},
                                                 {-1, cplx(coef(rng), coef(rng))},
                                                 {1, cplx(coef(rng), coef(rng))},
                                                 {3, cplx(coef(rng), coef(rng))}});
        const cplx lam(lamre(rng), lamim(rng));
        const double h = 1e-5 * (1.0 + std::abs(lam));
        const cplx fd = (hill::discriminant(p, lam + h, 1e-12) -
                         hill::discriminant(p, lam - h, 1e-12)) /
                        (2.0 * h);
        const cplx var = hill::discriminant_derivative(p, lam, 1e-12);
        CHECK(std::abs(var - fd) <= 1e-6 * std::max(1.0, std::abs(var)));
    }
}

TEST_CASE("Wronskian defect stays within tolerance budget") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> coef(-1.5, 1.5), lamre(-50.0, 2000.0),
        lamim(-60.0, 60.0);
    const double tol = 1e-10;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto p = FourierPotential::from_fourier(
            {{-1, cplx(coef(rng), coef(rng))}, {2, cplx(coef(rng), coef(rng))}});
        auto md = hill::fundamental_at_one(p, cplx(lamre(rng), lamim(rng)), tol);
        worst = std::max(worst, md.wronskian_defect);
    }
    CHECK(worst < 100.0 * tol);
}

TEST_CASE("dense trace: free closed forms and endpoint consistency") {
    auto z = FourierPotential::zero();
    SUBCASE("lambda = 4 pi^2: theta = cos(2 pi x)") {
        std::vector<double> grid{0.0, 0.5, 1.0};
        auto tr = hill::fundamental_on_grid(z, cplx(4.0 * PI * PI), grid, 1e-12);
        REQUIRE(tr.theta.size() == 3);
        CHECK(std::abs(tr.theta[0] - cplx(1.0)) < 1e-12);
        CHECK(std::abs(tr.theta[1] - cplx(-1.0)) < 1e-10);
        CHECK(std::abs(tr.theta[2] - cplx(1.0)) < 1e-10);
        CHECK(std::abs(tr.phi[1]) < 1e-10);   // sin(pi)/(2 pi) = 0
    }
    SUBCASE("lambda = 0: phi(x) = x") {
        std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
        auto tr = hill::fundamental_on_grid(z, cplx(0.0), grid, 1e-12);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(std::abs(tr.phi[i] - cplx(grid[i])) < 1e-11);
            CHECK(std::abs(tr.theta[i] - cplx(1.0)) < 1e-11);
            CHECK(std::abs(tr.dphi[i] - cplx(1.0)) < 1e-11);
        }
    }
    SUBCASE("cosine potential: endpoint matches fundamental_at_one") {
        auto p = FourierPotential::mathieu(0.3);
        std::vector<double> grid(64);
        for (int i = 0; i < 64; ++i) grid[i] = double(i) / 63.0;
        auto tr = hill::fundamental_on_grid(p, cplx(5.0), grid, 1e-12);
        auto md = hill::fundamental_at_one(p, cplx(5.0), 1e-12);
        CHECK(std::abs(tr.theta.back() - md.theta1) < 1e-10);
        CHECK(std::abs(tr.dtheta.back() - md.dtheta1) < 1e-10);
        CHECK(std::abs(tr.phi.back() - md.phi1) < 1e-10);
        CHECK(std::abs(tr.dphi.back() - md.dphi1) < 1e-10);
    }
    SUBCASE("Wronskian is 1 along the whole trace") {
        auto p = FourierPotential::two_term(cplx(0.5, 0.5), cplx(-1.0, 0.25));
        std::vector<double> grid(33);
        for (int i = 0; i < 33; ++i) grid[i] = double(i) / 32.0;
        auto tr = hill::fundamental_on_grid(p, cplx(17.0, -4.0), grid, 1e-11);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const cplx w = tr.theta[i] * tr.dphi[i] - tr.dtheta[i] * tr.phi[i];
            CHECK(std::abs(w - cplx(1.0)) < 1e-9);
        }
    }
}

TEST_CASE("dense trace: grid validation") {
    auto z = FourierPotential::zero();
    std::vector<double> bad1{0.0, 0.5, 0.4};            // not increasing
    std::vector<double> bad2{-0.1, 0.5, 1.0};           // outside [0,1]
    std::vector<double> bad3{0.0, 0.5, 1.5};            // outside [0,1]
    CHECK_THROWS_AS(hill::fundamental_on_grid(z, cplx(1.0), bad1), hill::BadConfig);
    CHECK_THROWS_AS(hill::fundamental_on_grid(z, cplx(1.0), bad2), hill::BadConfig);
    CHECK_THROWS_AS(hill::fundamental_on_grid(z, cplx(1.0), bad3), hill::BadConfig);
}

TEST_CASE("input validation of the spectral parameter") {
    auto z = FourierPotential::zero();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(hill::fundamental_at_one(z, cplx(nan, 0.0)), hill::NonFiniteInput);
    CHECK_THROWS_AS(hill::fundamental_at_one(z, cplx(1.0), -1e-8), hill::BadConfig);
    CHECK_THROWS_AS(hill::fundamental_at_one(z, cplx(1.0), 1e-10, 5), hill::BadConfig);
}

TEST_CASE("discriminant is analytic: Cauchy contour integral vanishes") {
    auto p = FourierPotential::mathieu(cplx(0.4, 0.3));
    const cplx center(6.0, 1.0);
    const double r = 2.0;
    // trapezoid rule on the circle is spectrally accurate for analytic F
    const int M = 48;
    cplx acc = 0.0;
    for (int k = 0; k < M; ++k) {
        const double th = TWO_PI * k / M;
        const cplx z = center + r * std::polar(1.0, th);
        const cplx dz = r * cplx(0.0, 1.0) * std::polar(1.0, th) * (TWO_PI / M);
        acc += hill::discriminant(p, z, 1e-12) * dz;
    }
    CHECK(std::abs(acc) < 1e-8);
}

TEST_CASE("derivative consistency between jet levels") {
    auto p = FourierPotential::two_term(cplx(0.7, -0.2), cplx(0.1, 0.9));
    const cplx lam(11.0, 3.0);
    auto j1 = hill::fundamental_at_one(p, lam, 1e-12, 1);
    auto j2 = hill::fundamental_at_one(p, lam, 1e-12, 2);
    CHECK(std::abs(j1.F - j2.F) < 1e-11);
    CHECK(std::abs(j1.dF - j2.dF) < 1e-10);
    auto j0 = hill::fundamental_at_one(p, lam, 1e-12, 0);
    CHECK(std::abs(j0.F - j1.F) < 1e-11);
    CHECK(j0.dF == cplx(0.0));
}
