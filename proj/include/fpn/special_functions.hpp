#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "fpn/types.hpp"

namespace fpn {

namespace detail {

// Lanczos approximation, g = 7, nine coefficients. Valid for re(x) >= 0.5;
// arguments left of that are routed through the reflection formula.
inline double lanczos_gamma_positive(double x) {
    static constexpr double g = 7.0;
    static constexpr double coeff[9] = {
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    };
    const double z = x - 1.0;
    double series = coeff[0];
    for (int i = 1; i < 9; ++i)
        series += coeff[i] / (z + static_cast<double>(i));
    const double t = z + g + 0.5;
    return std::sqrt(2.0 * std::numbers::pi)
        * std::pow(t, z + 0.5) * std::exp(-t) * series;
}

} // namespace detail

/// Real gamma function, defined for all non-pole real arguments including
/// negative non-integers (where it takes both signs). Arguments within 1e-8
/// of zero or a negative integer raise PoleError.
inline double gamma_real(double x) {
    constexpr double pole_guard = 1e-8;
    const double nearest = std::round(x);
    if (nearest <= 0.0 && std::abs(x - nearest) < pole_guard)
        throw PoleError("gamma_real: argument " + std::to_string(x)
                        + " is within the pole guard of a non-positive integer");
    if (x < 0.5) {
        // Reflection: gamma(x) * gamma(1-x) = pi / sin(pi*x).
        return std::numbers::pi
            / (std::sin(std::numbers::pi * x) * detail::lanczos_gamma_positive(1.0 - x));
    }
    return detail::lanczos_gamma_positive(x);
}

/// Principal-branch complex power z^w for real w: exp(w * Log z) with the
/// argument of Log in (-pi, pi]. A negative-zero imaginary part is treated
/// as +0 so that negative reals land on the upper side of the branch cut.
inline Complex complex_pow(Complex z, double w) {
    if (z.real() == 0.0 && z.imag() == 0.0) {
        if (w > 0.0)
            return Complex(0.0, 0.0);
        throw DomainError("complex_pow: zero base requires a positive exponent");
    }
    if (z.imag() == 0.0)
        z = Complex(z.real(), 0.0);
    return std::exp(w * std::log(z));
}

/// Euclidean norm of a complex vector: sqrt of the sum of squared moduli.
inline double norm2(const CVector& v) {
    double s = 0.0;
    for (const Complex& z : v)
        s += std::norm(z);
    return std::sqrt(s);
}

} // namespace fpn
