#include "hill/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace hill {

namespace {
// 8-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double GL8_X[4] = {0.18343464249564980494, 0.52553240991632898582,
                             0.79666647741362673959, 0.96028985649753623168};
constexpr double GL8_W[4] = {0.36268378337836198297, 0.31370664587788728734,
                             0.22238103445337447054, 0.10122853629037625915};
} // namespace

QuadRule composite_gl8(double a, double b, std::size_t panels) {
    if (panels == 0) panels = 1;
    QuadRule r;
    r.x.reserve(8 * panels);
    r.w.reserve(8 * panels);
    const double h = (b - a) / double(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = a + (double(p) + 0.5) * h;
        for (int j = 3; j >= 0; --j) {
            r.x.push_back(mid - 0.5 * h * GL8_X[j]);
            r.w.push_back(0.5 * h * GL8_W[j]);
        }
        for (int j = 0; j < 4; ++j) {
            r.x.push_back(mid + 0.5 * h * GL8_X[j]);
            r.w.push_back(0.5 * h * GL8_W[j]);
        }
    }
    return r;
}

std::size_t panels_for(double a, double b, double omega, std::size_t min_nodes) {
    // ~2.5 panels per oscillation period keeps the GL8 panel error near
    // roundoff; never fewer than min_nodes/8 panels.
    const double len = std::abs(b - a);
    const double periods = std::abs(omega) * len / TWO_PI;
    const auto p = std::size_t(std::ceil(2.5 * periods));
    return std::max({std::size_t(1), p, (min_nodes + 7) / 8});
}

} // namespace hill
