#include "hill/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hill {

GalerkinSystem galerkin_system(const FourierPotential& p, double t, int K) {
    if (!std::isfinite(t) || t < -PI - 1e-12 || t > PI + 1e-12)
        throw BadConfig("galerkin_system: t must lie in [-pi, pi], got " + std::to_string(t));
    if (K < p.order())
        throw BadConfig("galerkin_system: K = " + std::to_string(K) +
                        " is below the potential order " + std::to_string(p.order()));
    GalerkinSystem g;
    g.t = t;
    g.K = K;
    const int m = 2 * K + 1;
    g.H = Eigen::MatrixXcd::Zero(m, m);
    for (int a = 0; a < m; ++a) {
        const int j = a - K;
        g.H(a, a) = cplx((TWO_PI * j + t) * (TWO_PI * j + t), 0.0);
        for (const auto& [n, q] : p.coeffs()) {
            const int b = a - n;   // column index with j - k = n  =>  k = j - n
            if (b >= 0 && b < m) g.H(a, b) += q;
        }
    }
    return g;
}

int zigzag_label(int i) {
    const int mag = (i + 1) / 2;
    return (i % 2 == 1) ? -mag : mag;
}

int zigzag_position(int n) { return n == 0 ? 0 : (n < 0 ? -2 * n - 1 : 2 * n); }

namespace {

// Sorted index order by (Re, Im), then column phases fixed so the
// largest-modulus entry of each eigenvector is real positive.
void sort_and_fix(Eigen::VectorXcd& lam, Eigen::MatrixXcd& V) {
    const int m = int(lam.size());
    std::vector<int> ord(m);
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](int a, int b) {
        if (lam[a].real() != lam[b].real()) return lam[a].real() < lam[b].real();
        return lam[a].imag() < lam[b].imag();
    });
    Eigen::VectorXcd ls(m);
    Eigen::MatrixXcd Vs(m, m);
    for (int k = 0; k < m; ++k) {
        ls[k] = lam[ord[k]];
        Vs.col(k) = V.col(ord[k]);
        int imax = 0;
        double best = -1.0;
        for (int j = 0; j < m; ++j) {
            const double a = std::abs(Vs(j, k));
            if (a > best) {
                best = a;
                imax = j;
            }
        }
        const cplx piv = Vs(imax, k);
        if (best > 0.0) Vs.col(k) *= std::conj(piv) / std::abs(piv);
        const double nrm = Vs.col(k).norm();
        if (nrm > 0.0) Vs.col(k) /= nrm;
    }
    lam.swap(ls);
    V.swap(Vs);
}

} // namespace

std::vector<GalerkinPair> galerkin_eigen(const FourierPotential& p, double t, int K) {
    auto g = galerkin_system(p, t, K);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(g.H, /*computeEigenvectors=*/true);
    if (es.info() != Eigen::Success)
        throw EigensolverFailure("galerkin_eigen: dense eigensolver did not converge");
    Eigen::VectorXcd lam = es.eigenvalues();
    Eigen::MatrixXcd V = es.eigenvectors();
    sort_and_fix(lam, V);
    const int m = g.dim();
    std::vector<GalerkinPair> out(m);
    for (int k = 0; k < m; ++k) {
        out[k].lambda = lam[k];
        out[k].v.assign(V.col(k).data(), V.col(k).data() + m);
    }
    return out;
}

FiberBasis fiber_basis(const FourierPotential& p, double t, int K) {
    auto g = galerkin_system(p, t, K);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(g.H, true);
    if (es.info() != Eigen::Success)
        throw EigensolverFailure("fiber_basis: dense eigensolver did not converge");
    FiberBasis fb;
    fb.t = t;
    fb.K = K;
    fb.lambda = es.eigenvalues();
    fb.V = es.eigenvectors();
    sort_and_fix(fb.lambda, fb.V);

    const int m = g.dim();
    fb.W = fb.V.partialPivLu().solve(Eigen::MatrixXcd::Identity(m, m));
    if (!fb.W.allFinite())
        throw EigensolverFailure("fiber_basis: eigenvector matrix is numerically singular");

    fb.proj_norm.resize(m);
    fb.dlambda.resize(m);
    for (int k = 0; k < m; ++k) {
        fb.proj_norm[k] = fb.V.col(k).norm() * fb.W.row(k).norm();
        cplx d = 0.0;
        for (int a = 0; a < m; ++a) {
            const int j = a - K;
            d += 2.0 * (TWO_PI * j + t) * fb.W(k, a) * fb.V(a, k);
        }
        fb.dlambda[k] = d;
    }
    return fb;
}

} // namespace hill
