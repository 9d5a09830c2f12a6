#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "hill/galerkin.hpp"
#include "hill/monodromy.hpp"
#include "hill/potential.hpp"

using hill::cplx;
using hill::FourierPotential;
using hill::PI;
using hill::TWO_PI;

TEST_CASE("fiber matrix structure") {
    auto p = FourierPotential::two_term(cplx(0.5, 0.25), cplx(-1.0, 1.0));
    auto g = hill::galerkin_system(p, 0.7, 5);
    REQUIRE(g.dim() == 11);
    for (int a = 0; a < g.dim(); ++a) {
        const int j = a - g.K;
        // diagonal: free symbol value plus q_0 = 0, hence real
        CHECK(g.H(a, a).imag() == 0.0);
        CHECK(g.H(a, a).real() == doctest::Approx((TWO_PI * j + 0.7) * (TWO_PI * j + 0.7)));
        for (int b = 0; b < g.dim(); ++b) {
            if (a == b) continue;
            CHECK(g.H(a, b) == p.coeff((a - g.K) - (b - g.K)));
        }
    }
}

TEST_CASE("fiber matrix validation") {
    auto p = FourierPotential::from_fourier({{-3, cplx(1.0)}, {3, cplx(1.0)}});
    CHECK_THROWS_AS(hill::galerkin_system(p, 0.5, 2), hill::BadConfig);
    CHECK_THROWS_AS(hill::galerkin_system(p, 4.0, 8), hill::BadConfig);
    CHECK_NOTHROW(hill::galerkin_system(p, hill::PI, 3));
}

TEST_CASE("free operator: eigenpairs are the exact symbols and coordinate vectors") {
    auto z = FourierPotential::zero();
    const double t = PI / 2.0;
    auto pairs = hill::galerkin_eigen(z, t, 8);
    REQUIRE(pairs.size() == 17);
    // expected: (2 pi j + t)^2 sorted ascending = zigzag order of j
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const int n = hill::zigzag_label(int(i));
        const double ref = (TWO_PI * n + t) * (TWO_PI * n + t);
        CHECK(std::abs(pairs[i].lambda - cplx(ref)) < 1e-10 * (1.0 + ref));
        // eigenvector must be the coordinate vector at j = n, phase-fixed
        for (int a = 0; a < 17; ++a) {
            const cplx want = (a - 8 == n) ? cplx(1.0) : cplx(0.0);
            CHECK(std::abs(pairs[i].v[a] - want) < 1e-12);
        }
    }
}

TEST_CASE("zigzag maps are mutually inverse") {
    for (int i = 0; i < 25; ++i) CHECK(hill::zigzag_position(hill::zigzag_label(i)) == i);
    for (int n = -12; n <= 12; ++n) CHECK(hill::zigzag_label(hill::zigzag_position(n)) == n);
}

TEST_CASE("self-convergence: central eigenvalues are K-stable") {
    auto p = FourierPotential::mathieu(0.3);
    const double t = 1.0;
    auto a = hill::galerkin_eigen(p, t, 32);
    auto b = hill::galerkin_eigen(p, t, 48);
    // compare the 11 central labels n = -5..5
    for (int n = -5; n <= 5; ++n) {
        const cplx la = a[hill::zigzag_position(n)].lambda;
        const cplx lb = b[hill::zigzag_position(n)].lambda;
        CHECK(std::abs(la - lb) < 1e-8);
    }
}

TEST_CASE("cross-method: Galerkin eigenvalues satisfy the discriminant equation") {
    // two-term a = b = 1 at t = 1: the eigenvalue nearest (2 pi + 1)^2 must be
    // a root of F(lambda) = 2 cos t for the shooting discriminant.
    auto p = FourierPotential::two_term(cplx(1.0), cplx(1.0));
    const double t = 1.0;
    auto pairs = hill::galerkin_eigen(p, t, 32);
    const double target = (TWO_PI + t) * (TWO_PI + t);
    const cplx lam = pairs[hill::zigzag_position(1)].lambda;
    CHECK(std::abs(lam - cplx(target)) < 2.0);   // right neighborhood
    const cplx F = hill::discriminant(p, lam, 1e-12);
    CHECK(std::abs(F - 2.0 * std::cos(t)) < 1e-6);
}

TEST_CASE("cross-method: random small potentials, all central eigenvalues") {
    std::mt19937_64 rng(314);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    const int K = 32;
    for (double t : {0.5, 1.0, 2.0}) {
        auto p = FourierPotential::from_fourier({{-2, cplx(coef(rng), coef(rng))},
                                                 {-1, cplx(coef(rng), coef(rng))},
                                                 {1, cplx(coef(rng), coef(rng))},
                                                 {2, cplx(coef(rng), coef(rng))}});
        auto pairs = hill::galerkin_eigen(p, t, K);
        const cplx rhs = 2.0 * std::cos(t);
        for (int n = -K / 2; n <= K / 2; ++n) {
            const cplx lam = pairs[hill::zigzag_position(n)].lambda;
            CHECK(std::abs(hill::discriminant(p, lam, 1e-12) - rhs) < 1e-6);
        }
    }
}

TEST_CASE("separation bound for central eigenvalues") {
    // |lambda_n(t) - (2 pi k +- t)^2| >= |n-k| |n+k| for k outside {+-n, +-(n+1)}
    auto p = FourierPotential::mathieu(cplx(0.25, 0.35));
    const double t = 1.3;
    auto pairs = hill::galerkin_eigen(p, t, 32);
    for (int n = 5; n <= 16; ++n) {
        const cplx lam = pairs[hill::zigzag_position(n)].lambda;
        for (int k = -40; k <= 40; ++k) {
            if (k == n || k == -n || k == n + 1 || k == -(n + 1)) continue;
            const double dp = std::abs(lam - cplx((TWO_PI * k + t) * (TWO_PI * k + t)));
            const double dm = std::abs(lam - cplx((TWO_PI * k - t) * (TWO_PI * k - t)));
            const double bound = double(std::abs(n - k)) * double(std::abs(n + k));
            CHECK(dp >= bound);
            CHECK(dm >= bound);
        }
    }
}

TEST_CASE("fiber basis: biorthogonality, residuals, projection norms") {
    auto p = FourierPotential::from_fourier(
        {{-2, cplx(0.4, -0.1)}, {-1, cplx(0.3, 0.8)}, {1, cplx(-0.7, 0.2)}, {2, cplx(0.1, 0.5)}});
    const double t = 0.9;
    const int K = 16;
    auto fb = hill::fiber_basis(p, t, K);
    auto g = hill::galerkin_system(p, t, K);
    const int m = fb.dim();

    // W V = I
    const double biorth = (fb.W * fb.V - Eigen::MatrixXcd::Identity(m, m)).norm();
    CHECK(biorth < 1e-10);

    // right and left residuals
    for (int k = 0; k < m; ++k) {
        const double rres = (g.H * fb.V.col(k) - fb.lambda[k] * fb.V.col(k)).norm();
        CHECK(rres < 1e-9 * g.H.norm());
        const double lres = (fb.W.row(k) * g.H - fb.lambda[k] * fb.W.row(k)).norm() /
                            fb.W.row(k).norm();
        CHECK(lres < 1e-9 * g.H.norm());
        CHECK(fb.proj_norm[k] >= 1.0 - 1e-12);   // rank-one projection norm is >= 1
    }
}

TEST_CASE("fiber basis: free operator has unit projections and exact velocity") {
    auto z = FourierPotential::zero();
    const double t = 2.0;
    auto fb = hill::fiber_basis(z, t, 6);
    for (int i = 0; i < fb.dim(); ++i) {
        const int n = hill::zigzag_label(i);
        CHECK(fb.proj_norm[i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(fb.dlambda[i] - cplx(2.0 * (TWO_PI * n + t))) < 1e-9);
    }
}

TEST_CASE("fiber basis: real potential gives an (essentially) normal matrix") {
    auto p = FourierPotential::mathieu(0.4);   // real-valued
    auto fb = hill::fiber_basis(p, 1.1, 20);
    for (int n = -6; n <= 6; ++n)
        CHECK(fb.proj_norm[hill::zigzag_position(n)] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("fiber basis: eigenvalue velocity matches finite differences in t") {
    auto p = FourierPotential::mathieu(cplx(0.3, 0.2));
    const double t = 1.4, h = 1e-5;
    const int K = 20;
    auto fb = hill::fiber_basis(p, t, K);
    auto fp = hill::fiber_basis(p, t + h, K);
    auto fm = hill::fiber_basis(p, t - h, K);
    for (int n = -5; n <= 5; ++n) {
        const int i = hill::zigzag_position(n);
        const cplx fd = (fp.lambda[i] - fm.lambda[i]) / (2.0 * h);
        CHECK(std::abs(fb.dlambda[i] - fd) <=
              1e-6 * std::max(1.0, std::abs(fb.dlambda[i])));
    }
}
