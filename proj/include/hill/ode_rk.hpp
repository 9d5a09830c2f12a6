#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>

#include "hill/types.hpp"

namespace hill {

/// Options for the adaptive integrator.  Error control is mixed
/// absolute/relative per component: scale_i = atol + rtol * max(|y_i|, |y'_i|).
struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    double h_init = 0.0;          // 0: choose automatically
    long max_steps = 4'000'000;
};

/// Embedded Runge-Kutta-Fehlberg 7(8) pair (13 stages, rational tableau).
/// The 8th-order solution is propagated; the 7th-order companion provides
/// the local error estimate.  State is a fixed-size array of complex values.
///
/// Rhs signature: void rhs(double x, const State&, State& dydx).
template <std::size_t N>
class Rkf78 {
public:
    using State = std::array<cplx, N>;

    template <class Rhs>
    static void integrate(Rhs&& rhs, double x0, double x1, State& y, const OdeOptions& opt) {
        integrate_impl(std::forward<Rhs>(rhs), x0, x1, y, opt, nullptr);
    }

    /// Integrate from x0 to x1 landing exactly on each grid point in
    /// ascending order; on_node(index, x, y) fires at every grid point
    /// (grid values must lie in [x0, x1]).
    template <class Rhs, class Node>
    static void integrate_grid(Rhs&& rhs, double x0, double x1, State& y, const OdeOptions& opt,
                               std::span<const double> grid, Node&& on_node) {
        std::size_t next = 0;
        while (next < grid.size() && grid[next] <= x0 + 1e-15) {
            on_node(next, x0, y);
            ++next;
        }
        double xcur = x0;
        while (next < grid.size()) {
            const double xg = grid[next];
            integrate_impl(rhs, xcur, xg, y, opt, nullptr);
            on_node(next, xg, y);
            xcur = xg;
            ++next;
        }
        if (xcur < x1) integrate_impl(rhs, xcur, x1, y, opt, nullptr);
    }

private:
    template <class Rhs>
    static void integrate_impl(Rhs&& rhs, double x0, double x1, State& y, const OdeOptions& opt,
                               void*) {
        if (x1 <= x0) return;
        double x = x0;
        double h = opt.h_init > 0 ? opt.h_init : std::min(0.05, (x1 - x0));
        h = std::min(h, x1 - x0);

        std::array<State, 13> k;
        State ytmp, y8, y7err;
        long steps = 0;

        while (x < x1) {
            if (++steps > opt.max_steps)
                throw IntegratorFailure("RKF78: step budget exhausted");
            if (h < 1e-14 * std::max(1.0, std::abs(x)))
                throw IntegratorFailure("RKF78: step size underflow");
            if (x + h > x1) h = x1 - x;

            // stages
            rhs(x, y, k[0]);
            for (int i = 1; i < 13; ++i) {
                for (std::size_t c = 0; c < N; ++c) {
                    cplx acc = 0.0;
                    for (int j = 0; j < i; ++j)
                        if (A[i][j] != 0.0) acc += A[i][j] * k[j][c];
                    ytmp[c] = y[c] + h * acc;
                }
                rhs(x + C[i] * h, ytmp, k[i]);
            }

            // 8th-order solution and embedded error estimate:
            // err = h * 41/840 * (-k1 - k11 + k12 + k13)
            double errnorm = 0.0;
            for (std::size_t c = 0; c < N; ++c) {
                cplx acc = 0.0;
                for (int i = 0; i < 13; ++i)
                    if (B8[i] != 0.0) acc += B8[i] * k[i][c];
                y8[c] = y[c] + h * acc;
                y7err[c] = h * (41.0 / 840.0) * (-k[0][c] - k[10][c] + k[11][c] + k[12][c]);
                const double sc = opt.atol + opt.rtol * std::max(std::abs(y[c]), std::abs(y8[c]));
                const double e = std::abs(y7err[c]) / sc;
                errnorm = std::max(errnorm, e);
            }

            if (errnorm <= 1.0) {
                x += h;
                y = y8;
                const double grow = errnorm > 0 ? 0.9 * std::pow(errnorm, -1.0 / 8.0) : 4.0;
                h *= std::clamp(grow, 0.2, 4.0);
            } else {
                h *= std::max(0.2, 0.9 * std::pow(errnorm, -1.0 / 8.0));
            }
        }
    }

    // Fehlberg's 13-stage 7(8) tableau (exact rationals).
    static constexpr double C[13] = {
        0.0, 2.0 / 27, 1.0 / 9, 1.0 / 6, 5.0 / 12, 1.0 / 2, 5.0 / 6, 1.0 / 6, 2.0 / 3, 1.0 / 3,
        1.0, 0.0, 1.0};

    static constexpr double A[13][12] = {
        {},
        {2.0 / 27},
        {1.0 / 36, 1.0 / 12},
        {1.0 / 24, 0, 1.0 / 8},
        {5.0 / 12, 0, -25.0 / 16, 25.0 / 16},
        {1.0 / 20, 0, 0, 1.0 / 4, 1.0 / 5},
        {-25.0 / 108, 0, 0, 125.0 / 108, -65.0 / 27, 125.0 / 54},
        {31.0 / 300, 0, 0, 0, 61.0 / 225, -2.0 / 9, 13.0 / 900},
        {2.0, 0, 0, -53.0 / 6, 704.0 / 45, -107.0 / 9, 67.0 / 90, 3.0},
        {-91.0 / 108, 0, 0, 23.0 / 108, -976.0 / 135, 311.0 / 54, -19.0 / 60, 17.0 / 6,
         -1.0 / 12},
        {2383.0 / 4100, 0, 0, -341.0 / 164, 4496.0 / 1025, -301.0 / 82, 2133.0 / 4100,
         45.0 / 82, 45.0 / 164, 18.0 / 41},
        {3.0 / 205, 0, 0, 0, 0, -6.0 / 41, -3.0 / 205, -3.0 / 41, 3.0 / 41, 6.0 / 41, 0},
        {-1777.0 / 4100, 0, 0, -341.0 / 164, 4496.0 / 1025, -289.0 / 82, 2193.0 / 4100,
         51.0 / 82, 33.0 / 164, 12.0 / 41, 0, 1.0}};

    static constexpr double B8[13] = {
        0, 0, 0, 0, 0, 34.0 / 105, 9.0 / 35, 9.0 / 35, 9.0 / 280, 9.0 / 280, 0, 41.0 / 840,
        41.0 / 840};
};

} // namespace hill
