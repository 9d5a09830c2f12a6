#include "hill/monodromy.hpp"

#include <cmath>

namespace hill {
namespace {

// Dense coefficient view of the potential for fast evaluation inside the
// right-hand side: q(x) = sum_{n=1..K} (qp[n-1] e^{i 2 pi n x} + qm[n-1] e^{-i 2 pi n x}).
struct QEval {
    std::vector<cplx> qp, qm;
    explicit QEval(const FourierPotential& p) {
        const int K = p.order();
        qp.resize(K);
        qm.resize(K);
        for (int n = 1; n <= K; ++n) {
            qp[n - 1] = p.coeff(n);
            qm[n - 1] = p.coeff(-n);
        }
    }
    cplx operator()(double x) const {
        const cplx e(std::cos(TWO_PI * x), std::sin(TWO_PI * x));
        cplx ep = 1.0, acc = 0.0;
        for (std::size_t n = 0; n < qp.size(); ++n) {
            ep *= e;
            acc += qp[n] * ep + qm[n] * std::conj(ep);
        }
        return acc;
    }
};

// State layout for JLEV lambda-derivative levels of the two fundamental
// columns: index(col, lev, d) with col in {theta, phi}, d in {value, slope}.
// Level l satisfies u_l'' = (q - lambda) u_l - l u_{l-1}.
template <int JLEV>
struct HillRhs {
    const QEval& q;
    cplx lambda;
    static constexpr std::size_t N = 4 * JLEV;
    using State = std::array<cplx, N>;

    static constexpr std::size_t idx(int col, int lev, int d) {
        return std::size_t(((col * JLEV + lev) << 1) | d);
    }

    void operator()(double x, const State& y, State& dy) const {
        const cplx qx = q(x);
        for (int col = 0; col < 2; ++col)
            for (int lev = 0; lev < JLEV; ++lev) {
                const cplx u = y[idx(col, lev, 0)];
                const cplx v = y[idx(col, lev, 1)];
                cplx src = (qx - lambda) * u;
                if (lev > 0) src -= double(lev) * y[idx(col, lev - 1, 0)];
                dy[idx(col, lev, 0)] = v;
                dy[idx(col, lev, 1)] = src;
            }
    }

    static State initial() {
        State y{};
        y[idx(0, 0, 0)] = 1.0;   // theta(0) = 1
        y[idx(1, 0, 1)] = 1.0;   // phi'(0) = 1
        return y;
    }
};

template <int JLEV>
MonodromyData run_at_one(const FourierPotential& p, cplx lambda, double tol) {
    const QEval q(p);
    HillRhs<JLEV> rhs{q, lambda};
    auto y = HillRhs<JLEV>::initial();
    OdeOptions opt;
    opt.rtol = opt.atol = tol;
    Rkf78<HillRhs<JLEV>::N>::integrate(rhs, 0.0, 1.0, y, opt);

    auto at = [&](int col, int lev, int d) { return y[HillRhs<JLEV>::idx(col, lev, d)]; };
    MonodromyData m;
    m.lambda = lambda;
    m.jet = JLEV - 1;
    m.theta1 = at(0, 0, 0);
    m.dtheta1 = at(0, 0, 1);
    m.phi1 = at(1, 0, 0);
    m.dphi1 = at(1, 0, 1);
    m.F = m.theta1 + m.dphi1;
    if (JLEV >= 2) m.dF = at(0, 1, 0) + at(1, 1, 1);
    if (JLEV >= 3) m.d2F = at(0, 2, 0) + at(1, 2, 1);
    const cplx prod1 = m.theta1 * m.dphi1, prod2 = m.dtheta1 * m.phi1;
    const double scale = std::max({1.0, std::abs(prod1), std::abs(prod2)});
    m.wronskian_defect = std::abs(prod1 - prod2 - 1.0) / scale;
    return m;
}

} // namespace

MonodromyData fundamental_at_one(const FourierPotential& p, cplx lambda, double tol, int jet) {
    if (!finite(lambda)) throw NonFiniteInput("fundamental_at_one: lambda is not finite");
    if (!(tol > 0.0)) throw BadConfig("fundamental_at_one: tol must be positive");
    if (jet < 0 || jet > 2) throw BadConfig("fundamental_at_one: jet must be 0, 1 or 2");
    switch (jet) {
        case 0: return run_at_one<1>(p, lambda, tol);
        case 1: return run_at_one<2>(p, lambda, tol);
        default: return run_at_one<3>(p, lambda, tol);
    }
}

SolutionTrace fundamental_on_grid(const FourierPotential& p, cplx lambda,
                                  std::span<const double> grid, double tol) {
    if (!finite(lambda)) throw NonFiniteInput("fundamental_on_grid: lambda is not finite");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0 || grid[i] > 1.0)
            throw BadConfig("fundamental_on_grid: grid points must lie in [0, 1]");
        if (i > 0 && grid[i] <= grid[i - 1])
            throw BadConfig("fundamental_on_grid: grid must be strictly increasing");
    }
    const QEval q(p);
    HillRhs<1> rhs{q, lambda};
    auto y = HillRhs<1>::initial();
    OdeOptions opt;
    opt.rtol = opt.atol = tol;

    SolutionTrace tr;
    tr.lambda = lambda;
    tr.grid.assign(grid.begin(), grid.end());
    tr.theta.resize(grid.size());
    tr.dtheta.resize(grid.size());
    tr.phi.resize(grid.size());
    tr.dphi.resize(grid.size());

    Rkf78<4>::integrate_grid(rhs, 0.0, 1.0, y, opt, grid,
                             [&](std::size_t i, double, const std::array<cplx, 4>& s) {
                                 tr.theta[i] = s[HillRhs<1>::idx(0, 0, 0)];
                                 tr.dtheta[i] = s[HillRhs<1>::idx(0, 0, 1)];
                                 tr.phi[i] = s[HillRhs<1>::idx(1, 0, 0)];
                                 tr.dphi[i] = s[HillRhs<1>::idx(1, 0, 1)];
                             });
    return tr;
}

cplx discriminant(const FourierPotential& p, cplx lambda, double tol) {
    return fundamental_at_one(p, lambda, tol, 0).F;
}

cplx discriminant_derivative(const FourierPotential& p, cplx lambda, double tol) {
    return fundamental_at_one(p, lambda, tol, 1).dF;
}

} // namespace hill
