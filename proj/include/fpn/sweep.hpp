#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <thread>
#include <vector>

#include "fpn/frac_core.hpp"
#include "fpn/types.hpp"

namespace fpn {

struct SweepConfig {
    double alpha_min = -2.0;
    double alpha_max = 2.0;
    double alpha_step = 0.005;
    double integer_exclusion_radius = 0.01;
    double dedup_tol = 1e-4;

    void validate() const {
        if (!(alpha_min < alpha_max))
            throw std::invalid_argument("sweep: alpha_min must be below alpha_max");
        if (!(alpha_step > 0.0))
            throw std::invalid_argument("sweep: alpha_step must be positive");
        if (!(integer_exclusion_radius > 0.0) || !(dedup_tol > 0.0))
            throw std::invalid_argument("sweep: radii must be positive");
    }
};

struct RootRecord {
    CVector root;
    double alpha = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
};

struct SweepResult {
    std::vector<RootRecord> roots; // deduplicated, ascending alpha of first arrival
    std::size_t grid_size = 0;
    std::size_t converged = 0;
    double wall_seconds = 0.0;
};

/// The alpha values a sweep visits: alpha_min, alpha_min + step, ... up to
/// alpha_max, skipping every value within the exclusion radius of an integer
/// (where the fractional order would degenerate or hit a gamma pole).
inline std::vector<double> alpha_grid(const SweepConfig& cfg) {
    cfg.validate();
    std::vector<double> grid;
    for (std::size_t k = 0;; ++k) {
        const double a = cfg.alpha_min + static_cast<double>(k) * cfg.alpha_step;
        if (a > cfg.alpha_max + 1e-12)
            break;
        if (std::abs(a - std::round(a)) >= cfg.integer_exclusion_radius)
            grid.push_back(a);
    }
    return grid;
}

/// Greedy clustering of root records under the Euclidean metric: records are
/// taken in ascending-alpha order, each joining the first existing cluster
/// within dedup_tol or founding a new one. Every cluster is represented by
/// its minimum-residual member. Merging repeats until representatives are
/// pairwise separated by more than dedup_tol. Conjugate roots sit far apart
/// in this metric and are never merged.
inline std::vector<RootRecord> dedup_roots(std::vector<RootRecord> records, double dedup_tol) {
    std::stable_sort(records.begin(), records.end(),
                     [](const RootRecord& a, const RootRecord& b) { return a.alpha < b.alpha; });

    std::vector<RootRecord> reps;
    auto distance = [](const RootRecord& a, const RootRecord& b) {
        CVector d(a.root.size());
        for (std::size_t k = 0; k < d.size(); ++k)
            d[k] = a.root[k] - b.root[k];
        return norm2(d);
    };
    auto absorb = [&](std::vector<RootRecord>& into, const RootRecord& rec) {
        for (RootRecord& rep : into) {
            if (distance(rep, rec) <= dedup_tol) {
                if (rec.residual_norm < rep.residual_norm)
                    rep = rec;
                return true;
            }
        }
        return false;
    };

    for (const RootRecord& rec : records)
        if (!absorb(reps, rec))
            reps.push_back(rec);

    // Representative replacement can drag two clusters inside dedup_tol of
    // each other; re-merge until the pairwise separation holds.
    bool merged = true;
    while (merged) {
        merged = false;
        std::vector<RootRecord> next;
        for (const RootRecord& rep : reps) {
            if (absorb(next, rep))
                merged = true;
            else
                next.push_back(rep);
        }
        reps = std::move(next);
    }
    return reps;
}

/// Run solve at every grid alpha from the same initial condition, collect the
/// converged results, and return them deduplicated. Solves fan out to a
/// worker pool; results are merged in grid order so the outcome does not
/// depend on scheduling. workers = 0 uses the hardware concurrency.
inline SweepResult alpha_sweep(const NonlinearSystem& f, const CVector& x0,
                               const SolverConfig& solver_template,
                               const SweepConfig& sweep_cfg, unsigned workers = 0) {
    const auto t0 = std::chrono::steady_clock::now();
    if (x0.size() != f.dimension)
        throw std::invalid_argument("sweep: initial point size does not match system dimension");
    const std::vector<double> grid = alpha_grid(sweep_cfg);

    std::vector<SolveResult> results(grid.size());
    if (workers == 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, std::max<std::size_t>(grid.size(), 1));

    std::atomic<std::size_t> next{0};
    auto run = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= grid.size())
                return;
            SolverConfig cfg = solver_template;
            cfg.alpha = grid[i];
            try {
                results[i] = solve(f, x0, cfg);
            } catch (const std::exception&) {
                // e.g. a grid alpha the solver itself rejects (inside its own
                // integer guard when the sweep radius is tighter than the
                // solver's); count it as a failed point, never as a crash
                results[i].status = SolverStatus::NumericalFailure;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w)
        pool.emplace_back(run);
    run();
    for (std::thread& t : pool)
        t.join();

    SweepResult out;
    out.grid_size = grid.size();
    std::vector<RootRecord> records;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (results[i].status != SolverStatus::Converged)
            continue;
        ++out.converged;
        records.push_back(RootRecord{results[i].root, grid[i],
                                     results[i].residual_norm, results[i].iterations});
    }
    out.roots = dedup_roots(std::move(records), sweep_cfg.dedup_tol);
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

/// Empirical order of convergence from a solve trace: least-squares slope of
/// log(e_{i+1}) against log(e_i) over the trace tail (the last max(4,
/// ceil(n/4)) step norms), which must be positive and strictly decreasing.
inline double estimate_order(const IterationTrace& trace) {
    std::vector<double> e;
    e.reserve(trace.size());
    for (const IterationRecord& r : trace)
        e.push_back(r.step_norm);

    const std::size_t n = e.size();
    if (n < 4)
        throw InsufficientData("estimate_order: need at least 4 trace entries");
    const std::size_t tail = std::max<std::size_t>(4, (n + 3) / 4);
    std::vector<double> s(e.end() - static_cast<std::ptrdiff_t>(tail), e.end());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0.0))
            throw InsufficientData("estimate_order: nonpositive step norm in the trace tail");
        if (i > 0 && !(s[i] < s[i - 1]))
            throw InsufficientData("estimate_order: trace tail is not strictly decreasing");
    }

    // Fit log(e_{i+1}) = p * log(e_i) + c over consecutive tail pairs.
    const std::size_t pairs = s.size() - 1;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        mx += std::log(s[i]);
        my += std::log(s[i + 1]);
    }
    mx /= static_cast<double>(pairs);
    my /= static_cast<double>(pairs);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        const double dx = std::log(s[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(s[i + 1]) - my);
    }
    if (sxx == 0.0)
        throw InsufficientData("estimate_order: degenerate trace tail (constant step norm)");
    return sxy / sxx;
}

} // namespace fpn
