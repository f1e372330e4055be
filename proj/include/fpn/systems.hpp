#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpn/types.hpp"

namespace fpn {

/// Truncated sine-integral tail: f_k(x) = pi/2 - sum_{m=0}^{k} (-1)^m
/// x^{2m+1} / ((2m+1) (2m+1)!). Terms come from the ratio recurrence
/// t_{m+1} = -t_m x^2 / ((2m+2)(2m+3)) with the (2m+1) denominator applied
/// per term; the factorial itself would overflow double around m = 85.
inline NonlinearSystem make_sine_integral_tail(int k) {
    if (k < 0)
        throw std::invalid_argument("make_sine_integral_tail: k must be nonnegative");
    NonlinearSystem sys;
    sys.dimension = 1;
    sys.name = "si" + std::to_string(k);
    sys.eval = [k](const CVector& x) -> CVector {
        const Complex z = x[0];
        Complex t = z;
        Complex s = 0.0;
        for (int m = 0; m <= k; ++m) {
            s += t / static_cast<double>(2 * m + 1);
            t *= -z * z / static_cast<double>((2 * m + 2) * (2 * m + 3));
        }
        return {std::numbers::pi / 2.0 - s};
    };
    return sys;
}

/// Two-dimensional benchmark mixing a trigonometric and an exponential
/// component; has real and complex-conjugate roots.
inline NonlinearSystem make_example2() {
    NonlinearSystem sys;
    sys.dimension = 2;
    sys.name = "example2";
    sys.eval = [](const CVector& x) -> CVector {
        constexpr double pi = std::numbers::pi;
        constexpr double e = std::numbers::e;
        const Complex x1 = x[0], x2 = x[1];
        const Complex f1 = 0.5 * x1 * (std::sin(x1 * x2) - 1.0) - x2 / (4.0 * pi);
        const Complex f2 =
            (1.0 - 1.0 / (4.0 * pi)) * (std::exp(2.0 * x1) - e) + e * (x2 / pi - 2.0 * x1);
        return {f1, f2};
    };
    return sys;
}

/// Three-dimensional benchmark with hyperbolic and polynomial coupling.
inline NonlinearSystem make_example3() {
    NonlinearSystem sys;
    sys.dimension = 3;
    sys.name = "example3";
    sys.eval = [](const CVector& x) -> CVector {
        const Complex x1 = x[0], x2 = x[1], x3 = x[2];
        const Complex f1 =
            -3.6 * x2 * (std::cos(x2 * x2) + x1 * x1 * x1 * x3) - 3.6 * x3 + 10.8;
        const Complex f2 = -1.6 * x1 * (x1 + x2 * x2 * x2 * x3) - 1.6 * std::sinh(x3) + 6.4;
        const Complex f3 =
            -4.6 * x2 * (x1 * x3 * x3 * x3 + 1.0) - 4.6 * std::cosh(x1) + 27.6;
        return {f1, f2, f3};
    };
    return sys;
}

/// The code-registered benchmark systems, addressable by name.
inline std::vector<NonlinearSystem> benchmark_systems() {
    return {make_sine_integral_tail(50), make_example2(), make_example3()};
}

} // namespace fpn
