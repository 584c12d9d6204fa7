#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace irselect {

using cplx = std::complex<double>;

// Bad inputs (config, malformed measures, mismatched dimensions).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Failures of the numerics themselves (quadrature budget, truncation budget).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kEulerGamma = 0.57721566490153286061;

// coth(beta*lambda/2) without overflow at large beta*lambda.
inline double coth_half(double beta, double lambda) {
    const double x = beta * lambda;
    if (x <= 0.0) return kInfinity;
    const double e = std::exp(-x);
    return 1.0 + 2.0 * e / (-std::expm1(-x));
}

} // namespace irselect
