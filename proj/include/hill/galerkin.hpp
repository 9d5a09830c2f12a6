#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hill/potential.hpp"

namespace hill {

/// Fourier truncation of the boundary operator on the fiber with
/// quasimomentum t: in the orthonormal basis e^{i(2 pi j + t)x}, |j| <= K,
/// the operator  -y'' + q y  acts as the dense matrix
///   H_{jk} = (2 pi j + t)^2 delta_{jk} + q_{j-k}.
/// This is an algorithmically independent route to the fiber eigenvalues,
/// used to cross-check the shooting/discriminant method and to seed it.
struct GalerkinSystem {
    double t = 0.0;
    int K = 0;
    Eigen::MatrixXcd H;   // (2K+1) x (2K+1); row/col a = j + K for j in [-K, K]
    int dim() const { return 2 * K + 1; }
};

/// Assemble the truncated fiber matrix.  Requires K >= p.order() so the
/// whole coefficient table fits inside the band; throws BadConfig otherwise
/// or when t is outside [-pi, pi] (up to roundoff).
GalerkinSystem galerkin_system(const FourierPotential& p, double t, int K);

struct GalerkinPair {
    cplx lambda;
    std::vector<cplx> v;   // components over j = -K..K; largest entry real positive
};

/// All 2K+1 eigenpairs of the truncated fiber matrix, sorted by
/// (Re lambda, Im lambda) ascending; eigenvector phases are fixed by making
/// the largest-modulus component real and positive.  Central eigenvalues
/// (positions well inside the truncation window) approximate the true fiber
/// eigenvalues with error decreasing in K; edge eigenvalues are untrusted.
/// Throws EigensolverFailure if the dense solver does not converge.
std::vector<GalerkinPair> galerkin_eigen(const FourierPotential& p, double t, int K);

/// Band label for position i in the ascending-real-part order at a fiber
/// with t strictly inside (0, pi): 0, -1, +1, -2, +2, ...  For q = 0 the
/// eigenvalue at position i is exactly (2 pi n + t)^2 with n = zigzag_label(i).
int zigzag_label(int i);
/// Inverse map: position of band label n in the sorted order.
int zigzag_position(int n);

/// Full two-sided eigen-decomposition of a fiber matrix: right eigenvectors
/// (columns of V), the dual left rows W = V^{-1} (so W.row(k) H = lambda_k
/// W.row(k) and W V = I), the norm of each rank-one spectral projection, and
/// the t-derivative of each eigenvalue.
struct FiberBasis {
    double t = 0.0;
    int K = 0;
    Eigen::VectorXcd lambda;    // sorted ascending by (Re, Im)
    Eigen::MatrixXcd V;         // right eigenvectors in columns, phase-fixed
    Eigen::MatrixXcd W;         // V^{-1}; biorthogonal rows, W.row(k) * V.col(k) = 1
    Eigen::VectorXd proj_norm;  // ||P_k|| = ||v_k|| ||w_k||; equals 1/|alpha_k|
    Eigen::VectorXcd dlambda;   // d lambda_k / dt = sum_j 2(2 pi j + t) W_{kj} V_{jk}
    int dim() const { return 2 * K + 1; }
};

/// Eigen-decomposition of galerkin_system(p, t, K) with the sorting and
/// phase conventions of galerkin_eigen.  proj_norm[k] is the operator norm
/// of the spectral projection onto eigenvector k, which equals the
/// reciprocal |alpha|^{-1} of the normalized eigenfunction pairing; it is 1
/// exactly when the fiber matrix is normal at that eigenvalue (e.g. q real)
/// and grows without bound as lambda_k approaches a multiple eigenvalue.
FiberBasis fiber_basis(const FourierPotential& p, double t, int K);

} // namespace hill
