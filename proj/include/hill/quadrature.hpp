#pragma once

#include <cstddef>
#include <vector>

#include "hill/types.hpp"

namespace hill {

/// Composite quadrature rule: paired nodes and weights on [a, b].
struct QuadRule {
    std::vector<double> x, w;
    std::size_t size() const { return x.size(); }

    template <class F>
    auto integrate(F&& f) const {
        decltype(f(0.0)) acc{};
        for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * f(x[i]);
        return acc;
    }
};

/// Composite 8-point Gauss-Legendre rule with `panels` equal panels on [a, b].
QuadRule composite_gl8(double a, double b, std::size_t panels);

/// Panel count so that oscillations up to angular frequency omega over [a, b]
/// are resolved with ample margin (at least min_nodes nodes total).
std::size_t panels_for(double a, double b, double omega, std::size_t min_nodes = 256);

} // namespace hill
