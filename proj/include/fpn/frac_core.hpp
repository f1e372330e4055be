#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "fpn/special_functions.hpp"
#include "fpn/types.hpp"

namespace fpn {

/// Order selector: the fractional order alpha applies wherever the component
/// is nonzero; exactly-zero components fall back to the classical order 1,
/// which avoids the discontinuity of x^(-alpha) at the origin.
inline double beta_select(double alpha, Complex xk) {
    if (xk.real() == 0.0 && xk.imag() == 0.0)
        return 1.0;
    return alpha;
}

/// Fractional derivative of the constant function 1 at x, of order beta:
/// x^(-beta) / gamma(1 - beta). For beta = 1 this is the classical value 0.
/// Nonzero for non-integer beta, which is what drives the iteration.
inline Complex frac_deriv_const(Complex x, double beta) {
    if (beta == 1.0)
        return Complex(0.0, 0.0);
    if (x.real() == 0.0 && x.imag() == 0.0)
        throw DomainError("frac_deriv_const: x = 0 requires beta = 1 (route through beta_select)");
    return complex_pow(x, -beta) / gamma_real(1.0 - beta);
}

/// Diagonal matrix with an at(i,j) accessor; off-diagonal entries are exactly
/// zero by construction.
struct DiagonalMatrix {
    std::vector<Complex> diag;

    std::size_t size() const { return diag.size(); }
    Complex at(std::size_t i, std::size_t j) const {
        if (i >= diag.size() || j >= diag.size())
            throw std::out_of_range("DiagonalMatrix::at");
        return i == j ? diag[i] : Complex(0.0, 0.0);
    }
};

/// P-matrix of the iteration: diagonal entry k is the fractional derivative
/// of the constant 1 at [x]_k (order chosen by beta_select) plus epsilon.
inline DiagonalMatrix p_matrix(const CVector& x, double alpha, double epsilon) {
    DiagonalMatrix p;
    p.diag.reserve(x.size());
    for (const Complex& xk : x)
        p.diag.push_back(frac_deriv_const(xk, beta_select(alpha, xk)) + epsilon);
    return p;
}

namespace detail {

inline bool all_finite(const CVector& v) {
    for (const Complex& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            return false;
    return true;
}

// One unchecked iteration step: x - P(x) * f(x), exploiting diagonality.
inline CVector phi_step_raw(const NonlinearSystem& f, const CVector& x,
                            double alpha, double epsilon) {
    const DiagonalMatrix p = p_matrix(x, alpha, epsilon);
    const CVector fx = f.eval(x);
    CVector out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        out[k] = x[k] - p.diag[k] * fx[k];
    return out;
}

} // namespace detail

/// One step of the iteration map: x - P_{eps,beta}(x) * f(x).
/// Throws NumericalFailureError if any output component is non-finite.
inline CVector phi_step(const NonlinearSystem& f, const CVector& x,
                        double alpha, double epsilon) {
    if (f.dimension != x.size())
        throw std::invalid_argument("phi_step: dimension mismatch between system and iterate");
    CVector out = detail::phi_step_raw(f, x, alpha, epsilon);
    if (!detail::all_finite(out))
        throw NumericalFailureError("phi_step: non-finite component in the next iterate");
    return out;
}

/// Rounding operator: any component whose imaginary part has magnitude at
/// most 10^-m is replaced by its real part; all others pass through.
inline CVector rnd(const CVector& v, int m) {
    const double cut = std::pow(10.0, -m);
    CVector out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (std::abs(v[k].imag()) <= cut)
            out[k] = Complex(v[k].real(), 0.0);
        else
            out[k] = v[k];
    }
    return out;
}

/// Run the rounded iteration x_{i+1} = rnd(x_i - P(x_i) f(x_i), m) until both
/// the step norm and the residual norm fall to tol, the iterate norm exceeds
/// the divergence bound, a component goes non-finite, or max_iter is reached.
/// Norms are computed after rounding. When `trace` is given, one record per
/// iteration (iterate, step norm, residual norm) is appended.
inline SolveResult solve(const NonlinearSystem& f, const CVector& x0,
                         const SolverConfig& cfg, IterationTrace* trace = nullptr) {
    cfg.validate();
    if (f.dimension != x0.size())
        throw std::invalid_argument("solve: x0 dimension does not match the system");

    CVector x = x0;
    double step = 0.0;
    double res = 0.0;
    int i = 0;
    SolverStatus status = SolverStatus::MaxIterations;

    for (i = 1; i <= cfg.max_iter; ++i) {
        CVector xn = detail::phi_step_raw(f, x, cfg.alpha, cfg.epsilon);
        xn = rnd(xn, cfg.round_digits);

        CVector delta(x.size());
        for (std::size_t k = 0; k < x.size(); ++k)
            delta[k] = xn[k] - x[k];
        step = norm2(delta);
        res = norm2(f.eval(xn));
        if (trace)
            trace->push_back({xn, step, res});
        x = std::move(xn);

        if (!detail::all_finite(x)) {
            status = SolverStatus::NumericalFailure;
            break;
        }
        if (step <= cfg.tol && res <= cfg.tol) {
            status = SolverStatus::Converged;
            break;
        }
        if (norm2(x) > cfg.diverge_bound) {
            status = SolverStatus::Diverged;
            break;
        }
    }
    if (i > cfg.max_iter) {
        i = cfg.max_iter;
        status = SolverStatus::MaxIterations;
    }
    return SolveResult{std::move(x), step, res, i, status, cfg.alpha};
}

} // namespace fpn
