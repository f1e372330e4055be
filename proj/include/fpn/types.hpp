#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpn {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

/// Thrown when the real gamma function is evaluated too close to one of its
/// poles (zero and the negative integers).
class PoleError : public std::domain_error {
public:
    explicit PoleError(const std::string& what) : std::domain_error(what) {}
};

/// Thrown on inputs outside an operation's mathematical domain
/// (e.g. 0 raised to a non-positive power).
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Thrown when an iterate leaves the representable range (NaN/Inf components).
class NumericalFailureError : public std::runtime_error {
public:
    explicit NumericalFailureError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown by the convergence-order estimator when the trace is too short or
/// its tail is not strictly decreasing.
class InsufficientData : public std::runtime_error {
public:
    explicit InsufficientData(const std::string& what) : std::runtime_error(what) {}
};

/// A system f whose zeros are sought: a dimension, an evaluation map and a
/// display name. The evaluation map must preserve dimension and be safe for
/// concurrent invocation.
struct NonlinearSystem {
    std::size_t dimension = 0;
    std::function<CVector(const CVector&)> eval;
    std::string name;
};

enum class SolverStatus {
    Converged,
    MaxIterations,
    Diverged,
    NumericalFailure,
};

inline const char* to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::Converged: return "Converged";
        case SolverStatus::MaxIterations: return "MaxIterations";
        case SolverStatus::Diverged: return "Diverged";
        case SolverStatus::NumericalFailure: return "NumericalFailure";
    }
    return "Unknown";
}

struct SolverConfig {
    double alpha = 0.5;        // fractional order, in [-2,2] and away from integers
    double epsilon = 1e-3;     // regularizer added to every diagonal entry of P
    double tol = 1e-6;         // stopping tolerance for both step and residual norms
    int max_iter = 5000;
    int round_digits = 5;      // m of the rounding operator: drop |Im| <= 10^-m
    double diverge_bound = 1e8;

    void validate() const {
        if (alpha < -2.0 || alpha > 2.0)
            throw std::invalid_argument("alpha must lie in [-2, 2]");
        if (std::abs(alpha - std::round(alpha)) < 0.01)
            throw std::invalid_argument("alpha must keep a distance of at least 0.01 from integers");
        if (!(epsilon > 0.0) || !(epsilon < 1.0))
            throw std::invalid_argument("epsilon must lie in (0, 1)");
        if (!(tol > 0.0))
            throw std::invalid_argument("tol must be positive");
        if (max_iter < 1)
            throw std::invalid_argument("max_iter must be positive");
        if (round_digits < 1)
            throw std::invalid_argument("round_digits must be positive");
        if (!(diverge_bound > 0.0))
            throw std::invalid_argument("diverge_bound must be positive");
    }
};

struct SolveResult {
    CVector root;
    double step_norm = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
    SolverStatus status = SolverStatus::MaxIterations;
    double alpha_used = 0.0;
};

struct IterationRecord {
    CVector iterate;
    double step_norm = 0.0;
    double residual_norm = 0.0;
};

using IterationTrace = std::vector<IterationRecord>;

} // namespace fpn
