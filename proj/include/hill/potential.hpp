#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hill/types.hpp"

namespace hill {

/// Optional smoothness descriptor carried alongside a potential:
/// q has p continuous derivatives and coefficients decaying like |n|^{-s-1}.
struct SmoothnessMeta {
    std::optional<int> p;
    std::optional<int> s;
};

/// Trigonometric polynomial q(x) = sum_{|n|<=K} q_n e^{i 2 pi n x} with
/// period 1 and zero mean (q_0 = 0).  This is the potential of the
/// second-order operator  l(y) = -y'' + q(x) y  studied by the library.
class FourierPotential {
public:
    /// Build from an explicit coefficient table.  Throws NonzeroMean if a
    /// coefficient with n = 0 and |q_0| > mean_tol is supplied, and
    /// NonFiniteInput on NaN/inf coefficients.
    static FourierPotential from_fourier(const std::map<int, cplx>& coeffs,
                                         SmoothnessMeta meta = {},
                                         double mean_tol = 1e-14);

    /// Build from m >= 4 equispaced samples q(j/m), j = 0..m-1, via the
    /// discrete Fourier transform; truncation order K = floor(m/2), the
    /// even-m Nyquist mode is split evenly between +K and -K, and the mean
    /// coefficient is forced to zero.  Throws TooFewSamples for m < 4.
    static FourierPotential from_samples(std::span<const cplx> samples);

    static FourierPotential zero();
    /// q(x) = 2 a cos(2 pi x)  (coefficients q_{+1} = q_{-1} = a).
    static FourierPotential mathieu(cplx a);
    /// q(x) = a e^{-i 2 pi x} + b e^{i 2 pi x}  (q_{-1} = a, q_{+1} = b).
    static FourierPotential two_term(cplx a, cplx b);

    /// Evaluate q at x; the argument is reduced mod 1 first, so
    /// evaluate(x + 1) == evaluate(x) up to roundoff in the reduction.
    cplx evaluate(double x) const;

    /// Coefficient q_n (zero when absent from the table).
    cplx coeff(int n) const;

    /// Truncation order K >= 1 (largest |n| stored, at least 1).
    int order() const { return K_; }

    const std::map<int, cplx>& coeffs() const { return coeffs_; }
    const SmoothnessMeta& meta() const { return meta_; }

    /// sup_n |q_n|.
    double sup_coeff() const;

    /// True when q is real-valued, i.e. q_{-n} = conj(q_n) for all n.
    bool is_real(double tol = 1e-14) const;

    /// The complex-conjugate potential (coefficients conj(q_{-n})); the
    /// operator with this potential is the adjoint of the one with q.
    FourierPotential conjugated() const;

private:
    FourierPotential() = default;
    std::map<int, cplx> coeffs_;   // n -> q_n, n != 0
    int K_ = 1;
    SmoothnessMeta meta_;
};

} // namespace hill
