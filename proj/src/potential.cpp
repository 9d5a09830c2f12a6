#include "hill/potential.hpp"

#include <cmath>

namespace hill {

FourierPotential FourierPotential::from_fourier(const std::map<int, cplx>& coeffs,
                                                SmoothnessMeta meta, double mean_tol) {
    FourierPotential p;
    p.meta_ = meta;
    for (const auto& [n, q] : coeffs) {
        if (!finite(q))
            throw NonFiniteInput("potential coefficient q_" + std::to_string(n) + " is not finite");
        if (n == 0) {
            if (std::abs(q) > mean_tol)
                throw NonzeroMean("potential mean coefficient q_0 must vanish, got |q_0| = " +
                                  std::to_string(std::abs(q)));
            continue;   // silently drop an explicit zero mean
        }
        p.coeffs_[n] = q;
    }
    p.K_ = 1;
    for (const auto& [n, q] : p.coeffs_) p.K_ = std::max(p.K_, std::abs(n));
    return p;
}

FourierPotential FourierPotential::from_samples(std::span<const cplx> samples) {
    const std::size_t m = samples.size();
    if (m < 4) throw TooFewSamples("from_samples needs at least 4 samples, got " + std::to_string(m));
    for (cplx s : samples)
        if (!finite(s)) throw NonFiniteInput("potential sample is not finite");

    // q_n = (1/m) sum_j q(j/m) e^{-i 2 pi n j / m}
    auto dft = [&](int n) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double ph = -TWO_PI * double(n) * double(j) / double(m);
            acc += samples[j] * cplx(std::cos(ph), std::sin(ph));
        }
        return acc / double(m);
    };

    const int K = int(m / 2);
    std::map<int, cplx> c;
    const int nlo = -int((m - 1) / 2), nhi = int((m - 1) / 2);
    for (int n = nlo; n <= nhi; ++n) {
        if (n == 0) continue;   // mean forced to zero
        c[n] = dft(n);
    }
    if (m % 2 == 0) {
        // Nyquist mode: split evenly so real sample sets stay real-valued.
        const cplx cN = dft(K);
        c[K] += 0.5 * cN;
        c[-K] += 0.5 * cN;
    }
    // prune exact zeros produced by the split
    for (auto it = c.begin(); it != c.end();)
        it = (it->second == cplx(0.0)) ? c.erase(it) : std::next(it);
    return from_fourier(c);
}

FourierPotential FourierPotential::zero() { return from_fourier({}); }

FourierPotential FourierPotential::mathieu(cplx a) {
    return from_fourier({{-1, a}, {1, a}});
}

FourierPotential FourierPotential::two_term(cplx a, cplx b) {
    return from_fourier({{-1, a}, {1, b}});
}

cplx FourierPotential::evaluate(double x) const {
    const double xr = x - std::floor(x);
    cplx acc = 0.0;
    for (const auto& [n, q] : coeffs_) {
        const double ph = TWO_PI * double(n) * xr;
        acc += q * cplx(std::cos(ph), std::sin(ph));
    }
    return acc;
}

cplx FourierPotential::coeff(int n) const {
    auto it = coeffs_.find(n);
    return it == coeffs_.end() ? cplx(0.0) : it->second;
}

double FourierPotential::sup_coeff() const {
    double m = 0.0;
    for (const auto& [n, q] : coeffs_) m = std::max(m, std::abs(q));
    return m;
}

bool FourierPotential::is_real(double tol) const {
    for (const auto& [n, q] : coeffs_)
        if (std::abs(q - std::conj(coeff(-n))) > tol) return false;
    return true;
}

FourierPotential FourierPotential::conjugated() const {
    std::map<int, cplx> c;
    for (const auto& [n, q] : coeffs_) c[-n] = std::conj(q);
    FourierPotential p;
    p.coeffs_ = std::move(c);
    p.K_ = K_;
    p.meta_ = meta_;
    return p;
}

} // namespace hill
