#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpn/frac_core.hpp"
#include "fpn/receiver.hpp"
#include "fpn/sweep.hpp"
#include "fpn/systems.hpp"

namespace {

using fpn::Complex;
using fpn::CVector;
using nlohmann::json;

std::string fixed8(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.8f", v);
    return b;
}

std::string sci8(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.8e", v);
    return b;
}

std::string full_precision(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

std::string complex_text(const Complex& z) {
    if (z.imag() == 0.0)
        return fixed8(z.real());
    const char sign = z.imag() < 0.0 ? '-' : '+';
    return fixed8(z.real()) + ' ' + sign + ' ' + fixed8(std::abs(z.imag())) + 'i';
}

std::string root_text(const CVector& root) {
    if (root.size() == 1)
        return complex_text(root[0]);
    std::string s = "(";
    for (std::size_t k = 0; k < root.size(); ++k) {
        if (k)
            s += ", ";
        s += complex_text(root[k]);
    }
    return s + ")";
}

json root_json(const CVector& root) {
    json arr = json::array();
    for (const Complex& z : root)
        arr.push_back({z.real(), z.imag()});
    return arr;
}

struct ReportRow {
    double alpha;
    CVector root;
    double step_norm;
    double residual_norm;
    int iterations;
    std::string status;
};

void print_rows(std::ostream& os, const std::vector<ReportRow>& rows, const std::string& fmt) {
    if (fmt == "csv") {
        os << "alpha";
        const std::size_t dim = rows.empty() ? 0 : rows[0].root.size();
        for (std::size_t k = 1; k <= dim; ++k)
            os << ",x" << k << "_re,x" << k << "_im";
        os << ",step_norm,residual_norm,iterations,status\n";
        for (const ReportRow& r : rows) {
            os << full_precision(r.alpha);
            for (const Complex& z : r.root)
                os << ',' << full_precision(z.real()) << ',' << full_precision(z.imag());
            os << ',' << full_precision(r.step_norm) << ',' << full_precision(r.residual_norm)
               << ',' << r.iterations << ',' << r.status << '\n';
        }
        return;
    }
    if (fmt == "json-lines") {
        for (const ReportRow& r : rows) {
            json j;
            j["alpha"] = r.alpha;
            j["root"] = root_json(r.root);
            j["step_norm"] = r.step_norm;
            j["residual_norm"] = r.residual_norm;
            j["iterations"] = r.iterations;
            j["status"] = r.status;
            os << j.dump() << '\n';
        }
        return;
    }
    // aligned text, one row per line
    std::size_t rw = 4;
    for (const ReportRow& r : rows)
        rw = std::max(rw, root_text(r.root).size());
    char line[512];
    std::snprintf(line, sizeof line, "%-12s  %-*s  %-15s  %-15s  %-5s  %s", "alpha",
                  static_cast<int>(rw), "root", "step_norm", "residual_norm", "n", "status");
    os << line << '\n';
    for (const ReportRow& r : rows) {
        std::snprintf(line, sizeof line, "%-12s  %-*s  %-15s  %-15s  %-5d  %s",
                      fixed8(r.alpha).c_str(), static_cast<int>(rw), root_text(r.root).c_str(),
                      sci8(r.step_norm).c_str(), sci8(r.residual_norm).c_str(), r.iterations,
                      r.status.c_str());
        os << line << '\n';
    }
}

double strict_parse_double(const std::string& text, const std::string& what) {
    const std::string t = fpn::detail::trim(text);
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
    if (!ok || pos != t.size())
        throw std::invalid_argument("bad " + what + " value '" + t + "'");
    return v;
}

CVector parse_x0(const std::string& text) {
    CVector out;
    std::string cell;
    std::istringstream ss(text);
    while (std::getline(ss, cell, ','))
        out.emplace_back(strict_parse_double(cell, "--x0 component"), 0.0);
    if (out.empty())
        throw std::invalid_argument("--x0 must contain at least one component");
    return out;
}

fpn::ReceiverParams build_params(const std::string& file, const std::vector<std::string>& sets) {
    fpn::ReceiverParams p;
    if (!file.empty())
        p = fpn::load_params_file(file, p);
    for (const std::string& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        const std::string key = fpn::detail::trim(kv.substr(0, eq));
        const double v = strict_parse_double(kv.substr(eq + 1), key);
        if (!fpn::set_param(p, key, v))
            throw std::invalid_argument("unknown receiver parameter '" + key + "'");
    }
    p.validate();
    return p;
}

bool is_receiver(const std::string& name) {
    return name == "receiver2" || name == "receiver5";
}

std::optional<fpn::NonlinearSystem> lookup_system(const std::string& name,
                                                  const fpn::ReceiverParams& params) {
    for (fpn::NonlinearSystem& s : fpn::benchmark_systems())
        if (s.name == name)
            return s;
    if (name == "receiver2")
        return fpn::make_reduced_system(fpn::derive_constants(params));
    if (name == "receiver5")
        return fpn::make_full_system(fpn::derive_constants(params));
    if (name.size() > 2 && name.compare(0, 2, "si") == 0) {
        // any truncation order is constructible, e.g. si25
        try {
            std::size_t pos = 0;
            const int k = std::stoi(name.substr(2), &pos);
            if (pos == name.size() - 2 && k >= 0)
                return fpn::make_sine_integral_tail(k);
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

void write_trace(const std::string& path, const fpn::IterationTrace& trace) {
    std::ofstream tf(path);
    if (!tf)
        throw std::runtime_error("cannot open trace file: " + path);
    int i = 0;
    for (const fpn::IterationRecord& rec : trace) {
        json j;
        j["iteration"] = ++i;
        j["x"] = root_json(rec.iterate);
        j["step_norm"] = rec.step_norm;
        j["residual_norm"] = rec.residual_norm;
        tf << j.dump() << '\n';
    }
}

// per-subcommand option storage
struct SolverFlags {
    fpn::SolverConfig cfg;
    CLI::Option* eps_opt = nullptr;
    CLI::Option* tol_opt = nullptr;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& s, bool with_alpha) {
    if (with_alpha)
        cmd->add_option("--alpha", s.cfg.alpha, "fractional order of the iteration");
    s.eps_opt = cmd->add_option("--eps", s.cfg.epsilon,
                                "regularizer added to every diagonal entry of P");
    s.tol_opt = cmd->add_option("--tol", s.cfg.tol, "stopping tolerance on step and residual");
    cmd->add_option("--max-iter", s.cfg.max_iter, "iteration cap");
    cmd->add_option("--m", s.cfg.round_digits, "imaginary parts at or below 10^-m are dropped");
    cmd->add_option("--diverge", s.cfg.diverge_bound, "iterate norm that counts as divergence");
}

void receiver_defaults(const std::string& system, SolverFlags& s) {
    // receiver solves live at coarser tolerances; explicit flags still win
    if (!is_receiver(system))
        return;
    if (s.eps_opt != nullptr && s.eps_opt->count() == 0)
        s.cfg.epsilon = 1e-4;
    if (s.tol_opt != nullptr && s.tol_opt->count() == 0)
        s.cfg.tol = 1e-2;
}

int run_solve(const std::string& system, const std::string& x0_text, SolverFlags& sf,
              const std::string& params_file, const std::vector<std::string>& sets,
              const std::string& format, const std::string& trace_file) {
    const fpn::ReceiverParams params = build_params(params_file, sets);
    const auto sys = lookup_system(system, params);
    if (!sys) {
        std::cerr << "error: unknown system '" << system << "' (see list-systems)\n";
        return 1;
    }
    const CVector x0 = parse_x0(x0_text);
    if (x0.size() != sys->dimension) {
        std::cerr << "error: system '" << system << "' expects " << sys->dimension
                  << " components, --x0 has " << x0.size() << '\n';
        return 1;
    }
    receiver_defaults(system, sf);

    fpn::IterationTrace trace;
    const fpn::SolveResult res =
        fpn::solve(*sys, x0, sf.cfg, trace_file.empty() ? nullptr : &trace);
    if (!trace_file.empty())
        write_trace(trace_file, trace);

    print_rows(std::cout, {ReportRow{res.alpha_used, res.root, res.step_norm, res.residual_norm,
                                     res.iterations, fpn::to_string(res.status)}},
               format);
    return res.status == fpn::SolverStatus::Converged ? 0 : 2;
}

int run_sweep(const std::string& system, const std::string& x0_text, SolverFlags& sf,
              const fpn::SweepConfig& sweep_cfg, unsigned workers,
              const std::string& params_file, const std::vector<std::string>& sets,
              const std::string& format) {
    const fpn::ReceiverParams params = build_params(params_file, sets);
    const auto sys = lookup_system(system, params);
    if (!sys) {
        std::cerr << "error: unknown system '" << system << "' (see list-systems)\n";
        return 1;
    }
    const CVector x0 = parse_x0(x0_text);
    if (x0.size() != sys->dimension) {
        std::cerr << "error: system '" << system << "' expects " << sys->dimension
                  << " components, --x0 has " << x0.size() << '\n';
        return 1;
    }
    receiver_defaults(system, sf);

    fpn::SweepResult result = fpn::alpha_sweep(*sys, x0, sf.cfg, sweep_cfg, workers);
    std::vector<ReportRow> rows;
    rows.reserve(result.roots.size());
    for (const fpn::RootRecord& r : result.roots)
        rows.push_back(
            ReportRow{r.alpha, r.root, 0.0, r.residual_norm, r.iterations, "Converged"});
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ReportRow& a, const ReportRow& b) { return a.alpha < b.alpha; });
    // sweep rows have no step norm of their own; report the producing solve's
    // residual only, leaving step at zero in machine formats
    print_rows(std::cout, rows, format);
    std::fprintf(stderr, "sweep: %zu grid points, %zu converged, %zu distinct roots, %.2fs\n",
                 result.grid_size, result.converged, result.roots.size(),
                 result.wall_seconds);
    return 0;
}

int run_batch(const std::string& input, const std::string& output, SolverFlags& sf,
              unsigned workers, const std::string& params_file,
              const std::vector<std::string>& sets, const std::string& format) {
    const fpn::ReceiverParams params = build_params(params_file, sets);
    const std::vector<fpn::MeasurementRow> rows = fpn::read_measurements_csv_file(input);
    if (sf.eps_opt->count() == 0)
        sf.cfg.epsilon = 1e-4;
    if (sf.tol_opt->count() == 0)
        sf.cfg.tol = 1e-2;

    const std::vector<fpn::ReceiverSolution> sols =
        fpn::batch_solve(rows, params, sf.cfg, workers);

    std::ofstream file;
    if (output != "-") {
        file.open(output);
        if (!file)
            throw std::runtime_error("cannot open output file: " + output);
    }
    std::ostream& os = output == "-" ? std::cout : file;
    if (format == "json-lines") {
        for (const fpn::ReceiverSolution& s : sols) {
            json j;
            j["dni"] = s.dni;
            j["t_air"] = s.t_air;
            j["alpha"] = s.alpha;
            j["t_cell"] = s.t_cell ? json(*s.t_cell) : json(nullptr);
            j["t_hot"] = s.t_hot ? json(*s.t_hot) : json(nullptr);
            j["t_cold"] = s.t_cold ? json(*s.t_cold) : json(nullptr);
            j["eta_cell"] = s.eta_cell ? json(*s.eta_cell) : json(nullptr);
            j["eta_teg"] = s.eta_teg ? json(*s.eta_teg) : json(nullptr);
            j["step_norm"] = s.step_norm;
            j["residual_norm"] = s.residual_norm;
            j["iterations"] = s.iterations;
            j["status"] = fpn::to_string(s.status);
            os << j.dump() << '\n';
        }
    } else {
        fpn::write_solutions_csv(os, sols);
    }

    bool all_ok = true;
    for (std::size_t i = 0; i < sols.size(); ++i) {
        std::fprintf(stderr, "row %zu: %s (alpha=%g, n=%d)\n", i + 1,
                     fpn::to_string(sols[i].status), sols[i].alpha, sols[i].iterations);
        if (sols[i].status != fpn::RowStatus::Converged)
            all_ok = false;
    }
    return all_ok ? 0 : 2;
}

int run_list_systems() {
    std::printf("%-11s %-6s %s\n", "name", "dim", "description");
    std::printf("%-11s %-6d %s\n", "si50", 1, "truncated sine-integral series, 51 terms");
    std::printf("%-11s %-6d %s\n", "example2", 2, "trigonometric-exponential benchmark");
    std::printf("%-11s %-6d %s\n", "example3", 3, "hyperbolic-polynomial benchmark");
    std::printf("%-11s %-6d %s\n", "receiver2", 2,
                "hybrid receiver, reduced balance over (T_hot, T_cold)");
    std::printf("%-11s %-6d %s\n", "receiver5", 5,
                "hybrid receiver, full five-variable energy balance");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fractional pseudo-Newton root finder"};
    app.require_subcommand(1);
    const std::vector<std::string> formats = {"text", "csv", "json-lines"};

    std::string system, x0_text, format = "text", params_file, trace_file;
    std::string sw_format = "text", batch_format = "csv";
    std::string input, output;
    std::vector<std::string> sets, sw_sets, batch_sets;
    std::string sw_system, sw_x0, sw_params, batch_params;
    SolverFlags sf, sw_sf, batch_sf;
    fpn::SweepConfig sweep_cfg;
    unsigned sw_workers = 0, batch_workers = 0;

    CLI::App* solve_cmd = app.add_subcommand("solve", "run one solve of a named system");
    solve_cmd->add_option("--system", system, "system name")->required();
    solve_cmd->add_option("--x0", x0_text, "initial condition, comma-separated reals")
        ->required();
    add_solver_flags(solve_cmd, sf, true);
    solve_cmd->add_option("--format", format, "output format")
        ->check(CLI::IsMember(formats));
    solve_cmd->add_option("--params", params_file, "receiver parameter file")
        ->envname("FPN_PARAMS");
    solve_cmd->add_option("--set", sets, "receiver parameter override key=value");
    solve_cmd->add_option("--trace", trace_file, "write the iteration trace here (json lines)");

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "solve across a grid of fractional orders");
    sweep_cmd->add_option("--system", sw_system, "system name")->required();
    sweep_cmd->add_option("--x0", sw_x0, "initial condition, comma-separated reals")
        ->required();
    add_solver_flags(sweep_cmd, sw_sf, false);
    sweep_cmd->add_option("--alpha-min", sweep_cfg.alpha_min, "grid start");
    sweep_cmd->add_option("--alpha-max", sweep_cfg.alpha_max, "grid end");
    sweep_cmd->add_option("--alpha-step", sweep_cfg.alpha_step, "grid spacing");
    sweep_cmd->add_option("--exclusion", sweep_cfg.integer_exclusion_radius,
                          "skip orders this close to an integer");
    sweep_cmd->add_option("--dedup-tol", sweep_cfg.dedup_tol,
                          "roots closer than this collapse to one record");
    sweep_cmd->add_option("--workers", sw_workers, "worker threads (0 = hardware)");
    sweep_cmd->add_option("--format", sw_format, "output format")
        ->check(CLI::IsMember(formats));
    sweep_cmd->add_option("--params", sw_params, "receiver parameter file")
        ->envname("FPN_PARAMS");
    sweep_cmd->add_option("--set", sw_sets, "receiver parameter override key=value");

    CLI::App* batch_cmd =
        app.add_subcommand("batch", "solve the receiver for each measurement row");
    batch_cmd->add_option("--input", input, "measurement csv (dni,t_air,x0_2,x0_3[,alpha])")
        ->required();
    batch_cmd->add_option("--output", output, "solution csv path, or - for stdout")
        ->required();
    add_solver_flags(batch_cmd, batch_sf, false);
    batch_cmd->add_option("--workers", batch_workers, "worker threads (0 = hardware)");
    batch_cmd->add_option("--format", batch_format, "output format")
        ->check(CLI::IsMember(std::vector<std::string>{"csv", "json-lines"}));
    batch_cmd->add_option("--params", batch_params, "receiver parameter file")
        ->envname("FPN_PARAMS");
    batch_cmd->add_option("--set", batch_sets, "receiver parameter override key=value");

    CLI::App* list_cmd = app.add_subcommand("list-systems", "show the registered systems");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve_cmd->parsed())
            return run_solve(system, x0_text, sf, params_file, sets, format, trace_file);
        if (sweep_cmd->parsed())
            return run_sweep(sw_system, sw_x0, sw_sf, sweep_cfg, sw_workers, sw_params,
                             sw_sets, sw_format);
        if (batch_cmd->parsed())
            return run_batch(input, output, batch_sf, batch_workers, batch_params,
                             batch_sets, batch_format);
        if (list_cmd->parsed())
            return run_list_systems();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
