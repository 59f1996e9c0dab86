#include "pnls/semiclassical.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <thread>

namespace pnls {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

double region_min_V(const ProblemSpec& problem, const DiscreteProblem& discrete) {
    double v0 = problem.V(problem.anchor);
    for (std::size_t n = 0; n < discrete.V.size(); ++n) {
        if (discrete.in_region[n]) v0 = std::min(v0, discrete.V[n]);
    }
    return v0;
}

double region_max_Gamma(const ProblemSpec& problem, const DiscreteProblem& discrete) {
    double g0 = problem.Gamma(problem.anchor);
    for (std::size_t n = 0; n < discrete.Gamma.size(); ++n) {
        if (discrete.in_region[n]) g0 = std::max(g0, discrete.Gamma[n]);
    }
    return g0;
}

LimitResult solve_limit_problem(const ProblemSpec& problem, const DiscreteProblem& discrete, GridPtr grid,
                                const SolverParams& params) {
    if (grid->dim() != problem.dim) throw std::invalid_argument("limit grid dimension differs from the problem");
    LimitResult out;
    out.which = problem.which;
    out.V0 = region_min_V(problem, discrete);
    out.Gamma0 = region_max_Gamma(problem, discrete);

    DiscreteProblem limit;
    limit.grid = grid;
    limit.V.resize(grid->size());
    limit.Gamma.resize(grid->size());
    limit.in_region.assign(grid->size(), 1);
    limit.anchor = problem.anchor;
    for (std::size_t n = 0; n < grid->size(); ++n) {
        const Coord x = grid->coord(n);
        if (problem.which == ConcentrationCase::Lambda1) {
            limit.V[n] = out.V0;
            limit.Gamma[n] = problem.Gamma(x);
        } else {
            limit.V[n] = problem.V(x);
            limit.Gamma[n] = out.Gamma0;
        }
    }
    const auto& f = problem.nonlinearity;
    const auto pen = PenalizedNonlinearity::unpenalized(f, problem.alpha, PenalizedNonlinearity::default_k(f.theta()));
    SolveResult res = solve(limit, pen, 1.0, params);
    out.w = std::move(res.u);
    out.level = res.level;
    out.residual_norm = res.residual_norm;
    out.iterations = res.iterations;
    out.converged = res.converged;
    out.edge_ratio = res.edge_ratio;
    return out;
}

ScalarField original_residual(const ScalarField& u, const DiscreteProblem& problem,
                              const PenalizedNonlinearity& pen, double hbar) {
    ScalarField r(u.grid_ptr());
    apply_linear(hbar, problem, u, r);
    const auto& f = pen.base();
    for (std::size_t n = 0; n < u.size(); ++n) r[n] -= u[n] <= 0.0 ? 0.0 : problem.Gamma[n] * f.f(u[n]);
    return r;
}

CertificationReport certify_original(const SolveResult& result, const DiscreteProblem& problem,
                                     const PenalizedNonlinearity& pen, double hbar) {
    CertificationReport rep;
    const ScalarField& u = result.u;
    const Grid& grid = u.grid();
    rep.a = pen.a();
    rep.m = 0.0;
    for (std::size_t n : problem.band) rep.m = std::max(rep.m, u[n]);
    rep.boundary_below_a = rep.m < rep.a;

    auto flag = [&](std::size_t n, const char* check) {
        if (rep.failing_node) return;
        rep.failing_node = n;
        rep.failing_point = grid.coord(n);
        rep.failing_check = check;
    };

    rep.outside_below_a = true;
    rep.coefficient_positive = true;
    rep.coefficient_floor = pen.alpha() * (1.0 - 1.0 / pen.k());
    rep.min_coefficient = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < u.size(); ++n) {
        if (problem.in_region[n]) continue;
        rep.max_outside = std::max(rep.max_outside, u[n]);
        if (u[n] > rep.a + 1e-8) {
            rep.outside_below_a = false;
            flag(n, "outside_below_a");
        }
        if (u[n] > 0.0) {
            const double c = problem.V[n] - pen.g(problem.Gamma[n], false, u[n]) / u[n];
            rep.min_coefficient = std::min(rep.min_coefficient, c);
            if (c < rep.coefficient_floor - 1e-10) {
                rep.coefficient_positive = false;
                flag(n, "coefficient_positive");
            }
        }
    }
    if (!rep.boundary_below_a && !rep.failing_node) {
        std::size_t worst = problem.band.front();
        for (std::size_t n : problem.band) {
            if (u[n] > u[worst]) worst = n;
        }
        flag(worst, "boundary_below_a");
    }

    const Functional phi(problem, pen, hbar);
    const ScalarField r_pen = phi.residual(u);
    const ScalarField r_orig = original_residual(u, problem, pen, hbar);
    rep.residuals_agree = true;
    for (std::size_t n = 0; n < u.size(); ++n) {
        const double lhs = r_pen[n];
        const double rhs = r_orig[n];
        if (std::memcmp(&lhs, &rhs, sizeof(double)) != 0) {
            rep.residuals_agree = false;
            flag(n, "residuals_agree");
            break;
        }
    }
    rep.penalized_residual_norm = norm_l2(r_pen);
    rep.original_residual_norm = norm_l2(r_orig);
    return rep;
}

DecayFit decay_fit(const ScalarField& u, const Coord& center, double r1, double r2) {
    if (!(r1 > 0.0 && r2 > r1)) throw std::invalid_argument("decay window needs 0 < r1 < r2");
    const Grid& g = u.grid();
    double sd = 0.0, sy = 0.0, sdd = 0.0, sdy = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < u.size(); ++n) {
        const Coord x = g.coord(n);
        double r2sum = 0.0;
        for (int a = 0; a < g.dim(); ++a) r2sum += (x[a] - center[a]) * (x[a] - center[a]);
        const double d = std::sqrt(r2sum);
        if (d < r1 || d > r2) continue;
        if (!(u[n] > 1e-14)) {
            throw std::invalid_argument("decay window contains values at or below 1e-14");
        }
        const double y = std::log(u[n]);
        sd += d;
        sy += y;
        sdd += d * d;
        sdy += d * y;
        ++count;
    }
    if (count < 8) throw std::runtime_error("window under-resolved: fewer than 8 nodes");
    const double cnt = static_cast<double>(count);
    const double denom = cnt * sdd - sd * sd;
    if (!(denom > 0.0)) throw std::runtime_error("window under-resolved: all nodes at one distance");
    const double slope = (cnt * sdy - sd * sy) / denom;
    const double intercept = (sy - slope * sd) / cnt;
    DecayFit fit;
    fit.rate = slope == 0.0 ? 0.0 : -slope;
    fit.C = std::exp(intercept);
    fit.samples = count;
    return fit;
}

ScalarField rescale_to_limit(const ScalarField& u, const Coord& center, double hbar, GridPtr target) {
    if (target->dim() != u.grid().dim()) throw std::invalid_argument("target grid dimension differs");
    const int dim = target->dim();
    ScalarField v(target);
    for (std::size_t n = 0; n < v.size(); ++n) {
        const Coord y = target->coord(n);
        Coord x{};
        for (int a = 0; a < dim; ++a) x[a] = center[a] + hbar * y[a];
        v[n] = interpolate(u, x);
    }
    return v;
}

ScalarField contract_toward(const ScalarField& u, const Coord& anchor, double ratio) {
    const Grid& g = u.grid();
    ScalarField v(u.grid_ptr());
    for (std::size_t n = 0; n < v.size(); ++n) {
        const Coord x = g.coord(n);
        Coord y{};
        for (int a = 0; a < g.dim(); ++a) y[a] = anchor[a] + ratio * (x[a] - anchor[a]);
        v[n] = interpolate(u, y);
    }
    return v;
}

namespace {

SweepRecord make_record(const SolveResult& res, const DiscreteProblem& discrete, const PenalizedNonlinearity& pen,
                        double hbar, const SweepOptions& opts, std::vector<std::string>& warnings) {
    const double scale = std::pow(hbar, discrete.grid->dim());
    SweepRecord rec;
    rec.hbar = hbar;
    rec.level_scaled = res.level / scale;
    rec.Q_scaled = res.breakdown.Q / scale;
    rec.m = res.m;
    rec.argmax_point = res.argmax_point;
    rec.argmax_value = res.argmax_value;
    rec.V_at_argmax = res.V_at_argmax;
    rec.Gamma_at_argmax = res.Gamma_at_argmax;
    rec.converged = res.converged;
    rec.residual_norm = res.residual_norm;
    rec.iterations = res.iterations;
    rec.certification = certify_original(res, discrete, pen, hbar);
    rec.solves_original = res.converged && rec.certification.solves_original();
    try {
        rec.decay_rate = decay_fit(res.u, res.argmax_point, opts.decay_r1 * hbar, opts.decay_r2 * hbar).rate;
    } catch (const std::exception& e) {
        rec.decay_rate = 0.0;
        warnings.push_back("hbar=" + fmt(hbar) + ": decay fit skipped (" + e.what() + ")");
    }
    if (!res.converged) {
        rec.error = "not converged after " + std::to_string(res.iterations) + " iterations";
    }
    if (res.edge_ratio > 1e-8) {
        warnings.push_back("hbar=" + fmt(hbar) + ": solution at the box edge is " + fmt(res.edge_ratio) +
                           " of its maximum; enlarge the box");
    }
    if (opts.limit_level && rec.level_scaled > *opts.limit_level * (1.0 + opts.level_band)) {
        warnings.push_back("hbar=" + fmt(hbar) + ": level_scaled " + fmt(rec.level_scaled) +
                           " exceeds the limit level band");
    }
    return rec;
}

SweepRecord failed_record(double hbar, const std::string& why) {
    SweepRecord rec;
    rec.hbar = hbar;
    rec.error = why;
    return rec;
}

}  // namespace

SweepResult sweep(const ProblemSpec& problem, const DiscreteProblem& discrete, const PenalizedNonlinearity& pen,
                  const std::vector<double>& hbars, const SolverParams& params, const SweepOptions& opts) {
    (void)problem;
    if (hbars.empty()) throw std::invalid_argument("hbar list is empty");
    for (std::size_t i = 0; i < hbars.size(); ++i) {
        if (!(hbars[i] > 0.0)) throw std::invalid_argument("hbar values must be positive");
        if (i > 0 && !(hbars[i] < hbars[i - 1])) throw std::invalid_argument("hbar list must be strictly decreasing");
    }

    SweepResult out;
    out.records.resize(hbars.size());
    out.solutions.resize(hbars.size());
    std::vector<std::vector<std::string>> warnings(hbars.size());

    auto run_one = [&](std::size_t i, std::optional<ScalarField> start) {
        const double hbar = hbars[i];
        try {
            SolveResult res = solve(discrete, pen, hbar, params, std::move(start));
            out.records[i] = make_record(res, discrete, pen, hbar, opts, warnings[i]);
            out.solutions[i] = std::move(res.u);
        } catch (const std::exception& e) {
            out.records[i] = failed_record(hbar, e.what());
            warnings[i].push_back("hbar=" + fmt(hbar) + ": solve failed (" + e.what() + ")");
        }
    };

    if (opts.warm_start) {
        for (std::size_t i = 0; i < hbars.size(); ++i) {
            std::optional<ScalarField> start;
            if (i > 0 && out.records[i - 1].converged) {
                start = contract_toward(out.solutions[i - 1], discrete.anchor, hbars[i - 1] / hbars[i]);
            }
            run_one(i, std::move(start));
        }
    } else {
        const std::size_t workers =
            std::clamp<std::size_t>(static_cast<std::size_t>(std::max(opts.threads, 1)), 1, hbars.size());
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i = next++; i < hbars.size(); i = next++) run_one(i, std::nullopt);
        };
        std::vector<std::thread> pool;
        for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
        work();
        for (auto& t : pool) t.join();
    }

    for (auto& w : warnings) out.warnings.insert(out.warnings.end(), w.begin(), w.end());
    const auto& recs = out.records;
    if (recs.size() >= 3) {
        const std::size_t n = recs.size();
        if (!(recs[n - 1].m < recs[n - 2].m && recs[n - 2].m < recs[n - 3].m)) {
            out.warnings.push_back("m is not decreasing over the last three sweep points");
        }
    }
    return out;
}

std::vector<LemmaCheck> check_lemmas(const SweepResult& sweep, const LimitResult& limit,
                                     const PenalizedNonlinearity& pen, double b, const LemmaBands& bands) {
    std::vector<LemmaCheck> checks;
    const auto& recs = sweep.records;
    const std::size_t n = recs.size();
    const bool all_converged = std::all_of(recs.begin(), recs.end(), [](const SweepRecord& r) { return r.converged; });

    {
        LemmaCheck c{"upper_bound", false, {}};
        c.passed = all_converged && n >= 2 && limit.converged;
        std::ostringstream os;
        os.precision(8);
        const double cap = limit.level * (1.0 + bands.level_band);
        for (std::size_t i = n >= 2 ? n - 2 : 0; i < n; ++i) {
            os << "hbar=" << recs[i].hbar << " level_scaled=" << recs[i].level_scaled << "; ";
            if (!(recs[i].level_scaled <= cap)) c.passed = false;
        }
        os << "cap=" << cap;
        c.detail = os.str();
        checks.push_back(c);
    }
    {
        LemmaCheck c{"energy_bound", false, {}};
        double qmin = std::numeric_limits<double>::infinity();
        double qmax = 0.0;
        // least-squares slope of log Q_scaled against log(1/hbar)
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (const auto& r : recs) {
            qmin = std::min(qmin, r.Q_scaled);
            qmax = std::max(qmax, r.Q_scaled);
            const double x = std::log(1.0 / r.hbar);
            const double y = std::log(std::max(r.Q_scaled, 1e-300));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double cnt = static_cast<double>(n);
        const double denom = cnt * sxx - sx * sx;
        const double slope = denom > 0.0 ? (cnt * sxy - sx * sy) / denom : 0.0;
        const double ratio = qmin > 0.0 ? qmax / qmin : std::numeric_limits<double>::infinity();
        c.passed = all_converged && ratio <= bands.q_ratio_max && slope <= bands.q_trend_max;
        c.detail = "Q_scaled max/min=" + fmt(ratio) + " trend slope=" + fmt(slope);
        checks.push_back(c);
    }
    {
        LemmaCheck c{"boundary_max", false, {}};
        c.passed = all_converged && n >= 3 && recs[n - 1].m < recs[n - 2].m && recs[n - 2].m < recs[n - 3].m &&
                   recs[n - 1].m < bands.m_fraction * pen.a();
        c.detail = n ? "m(smallest hbar)=" + fmt(recs[n - 1].m) + " vs " + fmt(bands.m_fraction * pen.a()) : "empty";
        checks.push_back(c);
    }
    {
        const bool l1 = limit.which == ConcentrationCase::Lambda1;
        LemmaCheck c{"concentration", false, {}};
        std::vector<double> gaps;
        for (const auto& r : recs) {
            if (r.converged && r.argmax_value >= b) {
                gaps.push_back(l1 ? std::abs(r.V_at_argmax - limit.V0) : std::abs(r.Gamma_at_argmax - limit.Gamma0));
            }
        }
        c.passed = all_converged && gaps.size() >= 2;
        for (std::size_t i = 1; i < gaps.size(); ++i) {
            if (gaps[i] > gaps[i - 1] + 1e-12) c.passed = false;
        }
        std::ostringstream os;
        os.precision(6);
        os << (l1 ? "|V(argmax) - V0|:" : "|Gamma(argmax) - Gamma0|:");
        for (double g : gaps) os << " " << g;
        c.detail = os.str();
        checks.push_back(c);
    }
    {
        LemmaCheck c{"certification", false, {}};
        c.passed = n > 0 && recs.back().converged && recs.back().solves_original;
        c.detail = n ? "solves_original at hbar=" + fmt(recs.back().hbar) + ": " +
                           (recs.back().solves_original ? "true" : "false")
                     : "empty";
        checks.push_back(c);
    }
    return checks;
}

}  // namespace pnls
