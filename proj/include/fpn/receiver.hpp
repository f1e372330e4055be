#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fpn/frac_core.hpp"
#include "fpn/sweep.hpp"
#include "fpn/types.hpp"

namespace fpn {

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParamsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Physical description of the hybrid receiver. Field names double as the
/// keys of the key=value parameter file and of --set overrides.
struct ReceiverParams {
    double eta_opt = 0.85;      // optical efficiency
    double C_g = 800.0;         // concentration ratio
    double DNI = 900.0;         // direct normal irradiance, W/m^2
    double r_cell = 3e-6;       // thermal resistivities, m^2 K/W
    double r_sol = 1.603e-6;
    double r_cop = 7.5e-7;
    double r_cer = 8e-6;
    double r_intercon = 2.331e-7;
    double T_air = 20.0;        // ambient temperature, Celsius
    double A_cell = 9e-6;       // areas, m^2
    double A_TEG = 5.04e-5;
    double R_heat_exch = 0.5;   // heat exchanger resistance, K/W
    double eta_cell_ref = 0.43; // cell efficiency at the 25 C reference
    double f_star = 0.7;        // occupancy fraction of the TEG area
    double gamma_cell = 4.6e-4; // cell efficiency temperature coefficient, 1/K
    double b = 5e-4;            // lengths, m
    double l = 5e-4;
    double ZT = 1.0;            // thermoelectric figure of merit
    double k_TEG = 1.5;         // TEG thermal conductivity, W/(m K)

    void validate() const {
        if (!(A_cell > 0.0) || !(A_TEG > 0.0))
            throw std::invalid_argument("receiver params: areas must be positive");
        if (!(b > 0.0) || !(l > 0.0))
            throw std::invalid_argument("receiver params: lengths must be positive");
        if (!(k_TEG > 0.0))
            throw std::invalid_argument("receiver params: k_TEG must be positive");
        if (!(f_star > 0.0) || f_star > 1.0)
            throw std::invalid_argument("receiver params: f_star must lie in (0, 1]");
        if (ZT < 0.0)
            throw std::invalid_argument("receiver params: ZT must be nonnegative");
        if (DNI < 0.0)
            throw std::invalid_argument("receiver params: DNI must be nonnegative");
    }
};

/// Assign one named parameter; returns false if the key is unknown.
inline bool set_param(ReceiverParams& p, const std::string& key, double value) {
    static const struct {
        const char* name;
        double ReceiverParams::* member;
    } fields[] = {
        {"eta_opt", &ReceiverParams::eta_opt},
        {"C_g", &ReceiverParams::C_g},
        {"DNI", &ReceiverParams::DNI},
        {"r_cell", &ReceiverParams::r_cell},
        {"r_sol", &ReceiverParams::r_sol},
        {"r_cop", &ReceiverParams::r_cop},
        {"r_cer", &ReceiverParams::r_cer},
        {"r_intercon", &ReceiverParams::r_intercon},
        {"T_air", &ReceiverParams::T_air},
        {"A_cell", &ReceiverParams::A_cell},
        {"A_TEG", &ReceiverParams::A_TEG},
        {"R_heat_exch", &ReceiverParams::R_heat_exch},
        {"eta_cell_ref", &ReceiverParams::eta_cell_ref},
        {"f_star", &ReceiverParams::f_star},
        {"gamma_cell", &ReceiverParams::gamma_cell},
        {"b", &ReceiverParams::b},
        {"l", &ReceiverParams::l},
        {"ZT", &ReceiverParams::ZT},
        {"k_TEG", &ReceiverParams::k_TEG},
    };
    for (const auto& f : fields) {
        if (key == f.name) {
            p.*(f.member) = value;
            return true;
        }
    }
    return false;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& text, const std::string& what, int line,
                           const char* error_kind) {
    const std::string t = trim(text);
    std::size_t pos = 0;
    double v = 0.0;
    bool ok = !t.empty();
    if (ok) {
        try {
            v = std::stod(t, &pos);
        } catch (const std::exception&) {
            ok = false;
        }
    }
    if (ok && pos != t.size())
        ok = false;
    if (!ok) {
        std::ostringstream msg;
        msg << error_kind << " line " << line << ": bad " << what << " value '" << t << "'";
        throw std::runtime_error(msg.str()); // callers rethrow as their own type
    }
    return v;
}

} // namespace detail

/// Parse a key=value parameter file ('#' comments, blank lines allowed) on
/// top of the given base values. Unknown keys fail with the line number.
inline ReceiverParams load_params(std::istream& in, ReceiverParams base = {}) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << "params line " << lineno << ": expected key=value, got '" << line << "'";
            throw ParamsError(msg.str());
        }
        const std::string key = detail::trim(line.substr(0, eq));
        double value;
        try {
            value = detail::parse_number(line.substr(eq + 1), key, lineno, "params");
        } catch (const std::runtime_error& e) {
            throw ParamsError(e.what());
        }
        if (!set_param(base, key, value)) {
            std::ostringstream msg;
            msg << "params line " << lineno << ": unknown parameter '" << key << "'";
            throw ParamsError(msg.str());
        }
    }
    return base;
}

inline ReceiverParams load_params_file(const std::string& path, ReceiverParams base = {}) {
    std::ifstream in(path);
    if (!in)
        throw ParamsError("cannot open params file: " + path);
    return load_params(in, base);
}

/// The aggregate constants of the receiver balance equations.
struct ReceiverConstants {
    double a1, a2, a3, a4, a5, a6, a7, a8, a9;
};

inline ReceiverConstants derive_constants(const ReceiverParams& p) {
    const double spread =
        0.5 * std::sqrt(p.f_star * p.A_TEG) * (p.b * std::sqrt(p.f_star) + std::sqrt(p.A_TEG));
    if (!(spread > 0.0) || !(p.A_TEG > 0.0) || !(p.f_star * p.A_TEG * p.k_TEG > 0.0))
        throw DomainError("derive_constants: nonpositive denominator");
    ReceiverConstants c{};
    c.a1 = p.eta_opt * p.C_g * p.DNI;
    c.a2 = p.r_cell + p.r_sol +
           p.A_cell * ((p.r_cop + p.r_cer) / p.A_TEG + p.r_intercon / spread);
    c.a3 = p.A_cell * p.l / (p.f_star * p.A_TEG * p.k_TEG);
    c.a4 = p.T_air;
    c.a5 = p.A_cell * (p.r_intercon / spread + p.r_cer / p.A_TEG + p.R_heat_exch);
    c.a6 = -p.eta_cell_ref * p.gamma_cell;
    c.a7 = p.eta_cell_ref * (1.0 + 25.0 * p.gamma_cell);
    c.a8 = std::sqrt(1.0 + p.ZT);
    c.a9 = 273.15;
    return c;
}

/// Five-component energy-balance residual over (T_cell, T_hot, T_cold,
/// eta_cell, eta_TEG), written in the orientation used for reporting.
inline CVector f_full(const CVector& x, const ReceiverConstants& c) {
    if (x.size() != 5)
        throw std::invalid_argument("f_full: expected 5 components");
    const Complex x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3], x5 = x[4];
    const Complex hot = x2 + c.a9;
    if (hot == 0.0)
        throw DomainError("f_full: zero denominator x2 + a9");
    const Complex r = (x3 + c.a9) / hot;
    if (c.a8 + r == 0.0)
        throw DomainError("f_full: zero denominator a8 + (x3+a9)/(x2+a9)");
    return {
        x1 - x2 - c.a1 * c.a2 * (1.0 - x4),
        x2 - x3 - c.a1 * c.a3 * (1.0 - x4) * (1.0 - x5),
        x3 - c.a4 - c.a1 * c.a5 * (1.0 - x4) * (1.0 - x5),
        x4 - c.a6 * x1 - c.a7,
        x5 - (c.a8 - 1.0) * (1.0 - r) / (c.a8 + r),
    };
}

/// Two-component residual over (T_hot, T_cold) after eliminating the other
/// three unknowns; same reporting orientation as f_full.
inline CVector f_reduced(const CVector& x, const ReceiverConstants& c) {
    if (x.size() != 2)
        throw std::invalid_argument("f_reduced: expected 2 components");
    const Complex x2 = x[0], x3 = x[1];
    const double d1 = 1.0 + c.a1 * c.a2 * c.a6;
    if (d1 == 0.0)
        throw DomainError("f_reduced: zero denominator 1 + a1*a2*a6");
    const Complex d2 = c.a8 * (x2 + c.a9) + (x3 + c.a9);
    if (d2 == 0.0)
        throw DomainError("f_reduced: zero denominator a8*(x2+a9) + (x3+a9)");
    const Complex Q =
        (c.a6 * x2 + c.a7 - 1.0) * (c.a8 * (x3 + c.a9) + (x2 + c.a9)) / (d1 * d2);
    return {x2 - x3 + c.a1 * c.a3 * Q, x3 - c.a4 + c.a1 * c.a5 * Q};
}

/// Closed-form recovery of (T_cell, eta_cell, eta_TEG) from a reduced-system
/// root (T_hot, T_cold).
struct BackSubstitution {
    Complex x1, x4, x5;
};

inline BackSubstitution back_substitute(Complex x2, Complex x3, const ReceiverConstants& c) {
    const double d1 = 1.0 + c.a1 * c.a2 * c.a6;
    if (d1 == 0.0)
        throw DomainError("back_substitute: zero denominator 1 + a1*a2*a6");
    const Complex d2 = c.a8 * (x2 + c.a9) + (x3 + c.a9);
    if (d2 == 0.0)
        throw DomainError("back_substitute: zero denominator a8*(x2+a9) + (x3+a9)");
    BackSubstitution out;
    out.x1 = (x2 - c.a1 * c.a2 * (c.a7 - 1.0)) / d1;
    out.x4 = (c.a6 * (c.a1 * c.a2 + x2) + c.a7) / d1;
    out.x5 = (c.a8 - 1.0) * (x2 - x3) / d2;
    return out;
}

/// Solver-facing wrappers. The fixed-point update x - P(x) f(x) contracts
/// toward the physical temperatures only when the residuals enter with the
/// sign flipped relative to f_full/f_reduced above; the flip does not change
/// any residual norm, so reported diagnostics are unaffected.
inline NonlinearSystem make_full_system(const ReceiverConstants& c) {
    NonlinearSystem sys;
    sys.dimension = 5;
    sys.name = "receiver5";
    sys.eval = [c](const CVector& x) {
        CVector f = f_full(x, c);
        for (Complex& v : f)
            v = -v;
        return f;
    };
    return sys;
}

inline NonlinearSystem make_reduced_system(const ReceiverConstants& c) {
    NonlinearSystem sys;
    sys.dimension = 2;
    sys.name = "receiver2";
    sys.eval = [c](const CVector& x) {
        CVector f = f_reduced(x, c);
        for (Complex& v : f)
            v = -v;
        return f;
    };
    return sys;
}

// ---------------------------------------------------------------------------
// Measurement batch pipeline
// ---------------------------------------------------------------------------

struct MeasurementRow {
    double dni = 0.0;
    double t_air = 0.0;
    double x0_2 = 0.0;
    double x0_3 = 0.0;
    std::optional<double> alpha; // absent -> sweep fallback
};

enum class RowStatus { Converged, MaxIterations, Diverged, NumericalFailure, NonPhysical };

inline const char* to_string(RowStatus s) {
    switch (s) {
    case RowStatus::Converged: return "Converged";
    case RowStatus::MaxIterations: return "MaxIterations";
    case RowStatus::Diverged: return "Diverged";
    case RowStatus::NumericalFailure: return "NumericalFailure";
    case RowStatus::NonPhysical: return "NonPhysical";
    }
    return "?";
}

struct ReceiverSolution {
    double dni = 0.0;
    double t_air = 0.0;
    double alpha = 0.0;
    RowStatus status = RowStatus::NumericalFailure;
    // Present only for Converged rows; complex or failed solves carry none.
    std::optional<double> t_cell, t_hot, t_cold, eta_cell, eta_teg;
    double step_norm = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
};

/// Read measurement rows from CSV. The header is mandatory and must name the
/// columns dni,t_air,x0_2,x0_3,alpha in that order; the alpha column may be
/// omitted entirely, and present-but-empty alpha cells mean "absent".
inline std::vector<MeasurementRow> read_measurements_csv(std::istream& in) {
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (!line.empty() && line.back() == ',')
            cells.push_back("");
        return cells;
    };

    std::string line;
    if (!std::getline(in, line))
        throw CsvError("csv: empty input, expected a header line");
    int lineno = 1;
    std::vector<std::string> header = split(line);
    for (std::string& h : header)
        h = detail::trim(h);
    const std::vector<std::string> want = {"dni", "t_air", "x0_2", "x0_3", "alpha"};
    const bool has_alpha = header.size() == 5;
    if (header.size() != 4 && header.size() != 5)
        throw CsvError("csv line 1: expected columns dni,t_air,x0_2,x0_3[,alpha]");
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] != want[i])
            throw CsvError("csv line 1: expected column '" + want[i] + "', got '" +
                           header[i] + "'");

    std::vector<MeasurementRow> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty())
            continue;
        std::vector<std::string> cells = split(line);
        if (cells.size() != header.size()) {
            std::ostringstream msg;
            msg << "csv line " << lineno << ": expected " << header.size()
                << " cells, got " << cells.size();
            throw CsvError(msg.str());
        }
        MeasurementRow row;
        try {
            row.dni = detail::parse_number(cells[0], "dni", lineno, "csv");
            row.t_air = detail::parse_number(cells[1], "t_air", lineno, "csv");
            row.x0_2 = detail::parse_number(cells[2], "x0_2", lineno, "csv");
            row.x0_3 = detail::parse_number(cells[3], "x0_3", lineno, "csv");
            if (has_alpha && !detail::trim(cells[4]).empty())
                row.alpha = detail::parse_number(cells[4], "alpha", lineno, "csv");
        } catch (const CsvError&) {
            throw;
        } catch (const std::runtime_error& e) {
            throw CsvError(e.what());
        }
        if (row.dni < 0.0) {
            std::ostringstream msg;
            msg << "csv line " << lineno << ": dni must be nonnegative";
            throw CsvError(msg.str());
        }
        rows.push_back(row);
    }
    if (rows.empty())
        throw CsvError("csv: no data rows");
    return rows;
}

inline std::vector<MeasurementRow> read_measurements_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw CsvError("cannot open csv file: " + path);
    return read_measurements_csv(in);
}

namespace detail {

inline RowStatus to_row_status(SolverStatus s) {
    switch (s) {
    case SolverStatus::Converged: return RowStatus::Converged;
    case SolverStatus::MaxIterations: return RowStatus::MaxIterations;
    case SolverStatus::Diverged: return RowStatus::Diverged;
    case SolverStatus::NumericalFailure: return RowStatus::NumericalFailure;
    }
    return RowStatus::NumericalFailure;
}

inline ReceiverSolution solve_measurement(const MeasurementRow& row,
                                          const ReceiverParams& base,
                                          const SolverConfig& solver_template) {
    ReceiverSolution out;
    out.dni = row.dni;
    out.t_air = row.t_air;
    out.alpha = row.alpha.value_or(0.0);

    ReceiverParams p = base;
    p.DNI = row.dni;
    p.T_air = row.t_air;
    ReceiverConstants c{};
    try {
        c = derive_constants(p);
    } catch (const std::exception&) {
        return out; // defaults to NumericalFailure with empty values
    }
    const NonlinearSystem sys = make_reduced_system(c);
    const CVector x0 = {Complex(row.x0_2, 0.0), Complex(row.x0_3, 0.0)};

    // A row must never take down the batch: a solver rejection (say, a
    // measured alpha sitting on an integer) or a domain error mid-iteration
    // counts as a failed attempt for that row only.
    SolverConfig cfg = solver_template;
    SolveResult res;
    bool have_result = false;
    if (row.alpha) {
        cfg.alpha = *row.alpha;
        try {
            res = solve(sys, x0, cfg);
            have_result = true;
        } catch (const std::exception&) {
        }
    } else {
        // No measured alpha: walk the default sweep grid and keep the first
        // converged order; if none converges, report the last completed attempt.
        for (double a : alpha_grid(SweepConfig{})) {
            cfg.alpha = a;
            try {
                res = solve(sys, x0, cfg);
                have_result = true;
            } catch (const std::exception&) {
                continue;
            }
            if (res.status == SolverStatus::Converged)
                break;
        }
    }
    if (!have_result)
        return out;

    out.alpha = res.alpha_used;
    out.status = to_row_status(res.status);
    out.step_norm = res.step_norm;
    out.residual_norm = res.residual_norm;
    out.iterations = res.iterations;
    if (res.status == SolverStatus::Converged) {
        bool real_root = true;
        for (const Complex& z : res.root)
            if (z.imag() != 0.0)
                real_root = false;
        if (!real_root) {
            out.status = RowStatus::NonPhysical;
        } else {
            try {
                const BackSubstitution rest = back_substitute(res.root[0], res.root[1], c);
                out.t_cell = rest.x1.real();
                out.t_hot = res.root[0].real();
                out.t_cold = res.root[1].real();
                out.eta_cell = rest.x4.real();
                out.eta_teg = rest.x5.real();
            } catch (const std::exception&) {
                out.status = RowStatus::NumericalFailure;
            }
        }
    }
    return out;
}

} // namespace detail

/// Solve every measurement row against the receiver model. Rows are
/// independent and fan out to a worker pool, but the output vector always
/// matches the input order. Constants are rebuilt per row from its DNI and
/// T_air on top of the base parameters.
inline std::vector<ReceiverSolution> batch_solve(const std::vector<MeasurementRow>& rows,
                                                 const ReceiverParams& base,
                                                 const SolverConfig& solver_template,
                                                 unsigned workers = 0) {
    std::vector<ReceiverSolution> out(rows.size());
    if (workers == 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, std::max<std::size_t>(rows.size(), 1));

    std::atomic<std::size_t> next{0};
    auto run = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= rows.size())
                return;
            out[i] = detail::solve_measurement(rows[i], base, solver_template);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w)
        pool.emplace_back(run);
    run();
    for (std::thread& t : pool)
        t.join();
    return out;
}

/// Write solutions as CSV with full (round-trippable) precision; values a
/// row did not produce stay as empty cells.
inline void write_solutions_csv(std::ostream& os, const std::vector<ReceiverSolution>& sols) {
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
    os << "dni,t_air,alpha,t_cell,t_hot,t_cold,eta_cell,eta_teg,"
          "step_norm,residual_norm,iterations,status\n";
    for (const ReceiverSolution& s : sols) {
        os << num(s.dni) << ',' << num(s.t_air) << ',' << num(s.alpha) << ','
           << opt(s.t_cell) << ',' << opt(s.t_hot) << ',' << opt(s.t_cold) << ','
           << opt(s.eta_cell) << ',' << opt(s.eta_teg) << ',' << num(s.step_norm) << ','
           << num(s.residual_norm) << ',' << s.iterations << ',' << to_string(s.status)
           << '\n';
    }
}

} // namespace fpn
