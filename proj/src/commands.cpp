#include "pnls/commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace pnls {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int thread_cap() {
    const char* env = std::getenv("PENALIZED_NLS_THREADS");
    if (!env || !*env) return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) return 1;
    return static_cast<int>(std::min<long>(v, 256));
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string hbar_tag(double hbar) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", hbar);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

ordered_json point_json(const Coord& x, int dim) {
    ordered_json p = ordered_json::array();
    for (int a = 0; a < dim; ++a) p.push_back(x[a]);
    return p;
}

ordered_json certification_json(const CertificationReport& c, int dim) {
    ordered_json j;
    j["solves_original"] = c.solves_original();
    j["boundary_below_a"] = c.boundary_below_a;
    j["outside_below_a"] = c.outside_below_a;
    j["coefficient_positive"] = c.coefficient_positive;
    j["residuals_agree"] = c.residuals_agree;
    j["m"] = c.m;
    j["a"] = c.a;
    j["max_outside"] = c.max_outside;
    j["min_coefficient"] = c.min_coefficient;
    j["coefficient_floor"] = c.coefficient_floor;
    j["original_residual_norm"] = c.original_residual_norm;
    j["penalized_residual_norm"] = c.penalized_residual_norm;
    if (!c.failing_check.empty()) {
        j["failing_check"] = c.failing_check;
        if (c.failing_node) j["failing_node"] = *c.failing_node;
        if (c.failing_point) j["failing_point"] = point_json(*c.failing_point, dim);
    }
    return j;
}

ordered_json condition_json(const ConditionResult& r, int dim) {
    ordered_json j;
    j["name"] = r.name;
    j["passed"] = r.passed;
    j["detail"] = r.detail;
    if (r.x || r.u) {
        ordered_json ce;
        if (r.x) ce["x"] = point_json(*r.x, dim);
        if (r.u) ce["u"] = *r.u;
        j["counterexample"] = ce;
    }
    return j;
}

fs::path output_dir(const CommandOptions& opts, const Scenario& s) {
    fs::path dir = opts.out ? *opts.out : fs::path(s.config.output);
    fs::create_directories(dir);
    return dir;
}

SolverParams solver_params(const CommandOptions& opts, const Scenario& s) {
    SolverParams p = s.config.solver;
    if (opts.seed) p.seed = *opts.seed;
    return p;
}

double resolve_hbar(const CommandOptions& opts, const Scenario& s) {
    if (opts.hbar) {
        if (!(*opts.hbar > 0.0) || !std::isfinite(*opts.hbar)) throw ConfigError("--hbar", "must be positive");
        return *opts.hbar;
    }
    if (s.config.hbar.empty()) throw ConfigError("/hbar", "no hbar given in the config or on the command line");
    return s.config.hbar.back();
}

ordered_json limit_json(const LimitResult& lim) {
    ordered_json j;
    j["case"] = to_string(lim.which);
    j["c_underbar"] = lim.level;
    j["V0"] = lim.V0;
    j["Gamma0"] = lim.Gamma0;
    j["residual"] = lim.residual_norm;
    j["iterations"] = lim.iterations;
    j["converged"] = lim.converged;
    j["edge_ratio"] = lim.edge_ratio;
    return j;
}

int cmd_solve(const CommandOptions& opts, const Scenario& s, std::ostream& log) {
    const double hbar = resolve_hbar(opts, s);
    const auto& pen = s.penalization();
    const int dim = s.grid->dim();
    const SolveResult r = solve(s.discrete, pen, hbar, solver_params(opts, s));
    const CertificationReport cert = certify_original(r, s.discrete, pen, hbar);
    const double scale = std::pow(hbar, dim);

    const fs::path dir = output_dir(opts, s);
    const std::string tag = hbar_tag(hbar);
    write_solution_csv(dir / ("solution_" + tag + ".csv"), r.u);

    ordered_json j;
    j["hbar"] = hbar;
    j["case"] = to_string(s.problem.which);
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["level"] = r.level;
    j["level_scaled"] = r.level / scale;
    j["Q"] = r.breakdown.Q;
    j["Q_scaled"] = r.breakdown.Q / scale;
    j["residual"] = r.residual_norm;
    j["m"] = r.m;
    j["argmax"] = {{"point", point_json(r.argmax_point, dim)},
                   {"value", r.argmax_value},
                   {"V", r.V_at_argmax},
                   {"Gamma", r.Gamma_at_argmax}};
    j["nehari_t"] = r.nehari_t;
    j["edge_ratio"] = r.edge_ratio;
    j["penalization"] = {{"alpha", pen.alpha()}, {"k", pen.k()}, {"a", pen.a()}};
    j["gamma_scale"] = s.problem.gamma_scale;
    j["certification"] = certification_json(cert, dim);
    write_json(dir / ("summary_" + tag + ".json"), j);

    log << "hbar " << tag << ": level_scaled " << format_number(r.level / scale) << ", residual "
        << format_number(r.residual_norm) << ", " << (r.converged ? "converged" : "not converged") << "\n";
    return r.converged ? exit_code::ok : exit_code::not_converged;
}

int cmd_sweep(const CommandOptions& opts, const Scenario& s, std::ostream& log, std::ostream& err) {
    if (s.config.hbar.empty()) throw ConfigError("/hbar", "hbar list is empty");
    const auto& pen = s.penalization();
    const SolverParams params = solver_params(opts, s);

    const LimitResult lim = solve_limit_problem(s.problem, s.discrete, s.limit_grid, params);
    SweepOptions so = s.config.sweep;
    so.limit_level = lim.level;
    so.threads = thread_cap();
    const SweepResult sw = sweep(s.problem, s.discrete, pen, s.config.hbar, params, so);
    const double b = so.b.value_or(pen.a());
    const auto lemmas = check_lemmas(sw, lim, pen, b);

    const fs::path dir = output_dir(opts, s);
    write_sweep_csv(dir / "sweep.csv", sw.records, s.grid->dim());

    ordered_json j = limit_json(lim);
    j["a"] = pen.a();
    j["b"] = b;
    j["gamma_scale"] = s.problem.gamma_scale;
    ordered_json checks = ordered_json::array();
    for (const auto& c : lemmas) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    j["lemma_checks"] = checks;
    j["tolerance_bands"] = "engineering judgment; no convergence rate in hbar is available";
    j["warnings"] = sw.warnings;
    write_json(dir / "limit.json", j);

    std::size_t converged = 0;
    for (const auto& r : sw.records) {
        if (r.converged) ++converged;
        if (!r.error.empty()) err << "hbar " << hbar_tag(r.hbar) << ": " << r.error << "\n";
    }
    for (const auto& w : sw.warnings) err << "warning: " << w << "\n";
    for (const auto& c : lemmas) log << (c.passed ? "ok   " : "fail ") << c.name << ": " << c.detail << "\n";
    log << converged << "/" << sw.records.size() << " hbar values converged; c_underbar "
        << format_number(lim.level) << "\n";
    return converged > 0 ? exit_code::ok : exit_code::not_converged;
}

int cmd_check(const CommandOptions& opts, const Scenario& s, std::ostream& log) {
    const int dim = s.grid->dim();
    ConditionReport report = check_nonlinearity(s.problem.nonlinearity, dim);
    for (auto& r : check_problem(s.problem, *s.grid, s.band_width).results) report.add(std::move(r));
    if (s.pen) {
        for (auto& r : check_G_properties(*s.pen, s.problem, *s.grid).results) report.add(std::move(r));
    } else {
        report.add({"penalization", false, s.pen_error ? s.pen_error->what() : "unavailable", {}, {}});
    }

    ordered_json j;
    j["passed"] = report.passed();
    ordered_json list = ordered_json::array();
    for (const auto& r : report.results) list.push_back(condition_json(r, dim));
    j["conditions"] = list;
    if (const auto* f = report.first_failure()) j["first_failure"] = condition_json(*f, dim);
    write_json(output_dir(opts, s) / "conditions.json", j);

    for (const auto& r : report.results) log << (r.passed ? "ok   " : "fail ") << r.name << ": " << r.detail << "\n";
    return report.passed() ? exit_code::ok : exit_code::condition_failed;
}

int cmd_limit(const CommandOptions& opts, const Scenario& s, std::ostream& log) {
    const LimitResult lim = solve_limit_problem(s.problem, s.discrete, s.limit_grid, solver_params(opts, s));
    const fs::path dir = output_dir(opts, s);
    write_solution_csv(dir / "limit_solution.csv", lim.w);
    write_json(dir / "limit.json", limit_json(lim));
    log << "c_underbar " << format_number(lim.level) << ", " << (lim.converged ? "converged" : "not converged")
        << "\n";
    return lim.converged ? exit_code::ok : exit_code::not_converged;
}

int cmd_decay_fit(const CommandOptions& opts, const Scenario& s, std::ostream& log) {
    const double hbar = resolve_hbar(opts, s);
    const SolveResult r = solve(s.discrete, s.penalization(), hbar, solver_params(opts, s));
    const double r1 = opts.window ? opts.window->first : s.config.sweep.decay_r1 * hbar;
    const double r2 = opts.window ? opts.window->second : s.config.sweep.decay_r2 * hbar;
    const DecayFit fit = decay_fit(r.u, r.argmax_point, r1, r2);

    ordered_json j;
    j["hbar"] = hbar;
    j["center"] = point_json(r.argmax_point, s.grid->dim());
    j["window"] = {r1, r2};
    j["C"] = fit.C;
    j["rate"] = fit.rate;
    j["rate_scaled"] = fit.rate * hbar;
    j["samples"] = fit.samples;
    j["converged"] = r.converged;
    write_json(output_dir(opts, s) / ("decay_" + hbar_tag(hbar) + ".json"), j);
    log << "rate " << format_number(fit.rate) << " (" << fit.samples << " nodes)\n";
    return r.converged ? exit_code::ok : exit_code::not_converged;
}

}  // namespace

void write_solution_csv(const fs::path& path, const ScalarField& u) {
    const Grid& g = u.grid();
    std::string text = g.dim() == 1 ? "x,u\n" : "x,y,u\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Coord x = g.coord(i);
        text += format_number(x[0]);
        if (g.dim() == 2) text += "," + format_number(x[1]);
        text += "," + format_number(u[i]) + "\n";
    }
    write_text(path, text);
}

void write_sweep_csv(const fs::path& path, const std::vector<SweepRecord>& records, int dim) {
    std::string text = "hbar,level_scaled,Q_scaled,m,argmax_x";
    if (dim == 2) text += ",argmax_y";
    text += ",V_at_argmax,Gamma_at_argmax,solves_original,decay_rate,converged\n";
    for (const auto& r : records) {
        text += format_number(r.hbar) + "," + format_number(r.level_scaled) + "," + format_number(r.Q_scaled) + "," +
                format_number(r.m) + "," + format_number(r.argmax_point[0]);
        if (dim == 2) text += "," + format_number(r.argmax_point[1]);
        text += "," + format_number(r.V_at_argmax) + "," + format_number(r.Gamma_at_argmax) + "," +
                (r.solves_original ? "true" : "false") + "," + format_number(r.decay_rate) + "," +
                (r.converged ? "true" : "false") + "\n";
    }
    write_text(path, text);
}

int run_command(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
    try {
        const Scenario s = build_scenario(load_config(opts.config));
        if (opts.command == "solve") return cmd_solve(opts, s, log);
        if (opts.command == "sweep") return cmd_sweep(opts, s, log, err);
        if (opts.command == "check") return cmd_check(opts, s, log);
        if (opts.command == "limit") return cmd_limit(opts, s, log);
        if (opts.command == "decay-fit") return cmd_decay_fit(opts, s, log);
        err << "unknown command: " << opts.command << "\n";
        return exit_code::internal;
    } catch (const ConfigError& e) {
        err << "config error at " << e.what() << "\n";
        return exit_code::config;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << "\n";
        return exit_code::not_converged;
    } catch (const CgError& e) {
        err << "solver error: " << e.what() << "\n";
        return exit_code::not_converged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::internal;
    }
}

}  // namespace pnls
