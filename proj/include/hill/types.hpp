#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace hill {

using cplx = std::complex<double>;

constexpr double PI = 3.141592653589793238462643383279502884;
constexpr double TWO_PI = 2.0 * PI;

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input-contract violations (bad arguments, malformed files).
struct InputError : Error { using Error::Error; };
/// Numerical-process failures (integrator, eigensolver, root finding).
struct NumericalError : Error { using Error::Error; };

struct NonzeroMean : InputError { using InputError::InputError; };
struct TooFewSamples : InputError { using InputError::InputError; };
struct NonFiniteInput : InputError { using InputError::InputError; };
struct ZeroCoefficient : InputError { using InputError::InputError; };
struct ZeroProduct : InputError { using InputError::InputError; };
struct ExclusionPoint : InputError { using InputError::InputError; };
struct BadConfig : InputError { using InputError::InputError; };

struct IntegratorFailure : NumericalError { using NumericalError::NumericalError; };
struct EigensolverFailure : NumericalError { using NumericalError::NumericalError; };
struct NewtonDivergence : NumericalError { using NumericalError::NumericalError; };
struct SeedCollision : NumericalError { using NumericalError::NumericalError; };
struct DirichletDegeneracy : NumericalError { using NumericalError::NumericalError; };
struct MultipleEigenvalue : NumericalError { using NumericalError::NumericalError; };
struct NotAnEigenvalue : NumericalError { using NumericalError::NumericalError; };
struct BranchInconsistency : NumericalError { using NumericalError::NumericalError; };
struct IrregularArc : NumericalError { using NumericalError::NumericalError; };
struct QuadratureNonconvergence : NumericalError { using NumericalError::NumericalError; };

inline bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

} // namespace hill
