#include "pnls/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pnls {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string fmt(const Coord& x, int dim) {
    std::ostringstream os;
    os.precision(17);
    os << "[";
    for (int a = 0; a < dim; ++a) os << (a ? ", " : "") << x[a];
    os << "]";
    return os.str();
}

// Geometric sequence from `from` to `to` inclusive with `count` points.
std::vector<double> geometric(double from, double to, std::size_t count) {
    std::vector<double> out(count);
    const double lf = std::log(from);
    const double lt = std::log(to);
    for (std::size_t i = 0; i < count; ++i) {
        const double s = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
        out[i] = std::exp(lf + s * (lt - lf));
    }
    out.front() = from;
    out.back() = to;
    return out;
}

// Relative slack used by the sampled inequality checks.
constexpr double kRel = 1e-12;

bool leq(double lhs, double rhs) { return lhs <= rhs + kRel * std::max(std::abs(lhs), std::abs(rhs)); }

}  // namespace

// ---------------------------------------------------------------------------
// Nonlinearity

Nonlinearity Nonlinearity::power(double q, std::optional<double> theta, std::optional<double> p) {
    if (!(q > 2.0)) throw std::invalid_argument("power nonlinearity requires q > 2");
    return combined({{1.0, q}}, theta, p);
}

Nonlinearity Nonlinearity::combined(std::vector<Term> terms, std::optional<double> theta,
                                    std::optional<double> p) {
    if (terms.empty()) throw std::invalid_argument("combined nonlinearity needs at least one term");
    double qmin = std::numeric_limits<double>::infinity();
    double qmax = -qmin;
    for (const Term& t : terms) {
        if (!(t.coefficient > 0.0)) throw std::invalid_argument("nonlinearity coefficients must be positive");
        if (!(t.q > 2.0)) throw std::invalid_argument("nonlinearity exponents must satisfy q > 2");
        qmin = std::min(qmin, t.q);
        qmax = std::max(qmax, t.q);
    }
    Nonlinearity nl;
    std::ostringstream name;
    name.precision(17);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        name << (i ? " + " : "") << terms[i].coefficient << "*u^" << (terms[i].q - 1.0);
    }
    nl.name_ = name.str();
    nl.terms_ = terms;
    nl.f_ = [terms](double u) {
        double s = 0.0;
        for (const Term& t : terms) s += t.coefficient * std::pow(u, t.q - 1.0);
        return s;
    };
    nl.primitive_ = [terms](double u) {
        double s = 0.0;
        for (const Term& t : terms) s += t.coefficient * std::pow(u, t.q) / t.q;
        return s;
    };
    nl.derivative_ = [terms](double u) {
        double s = 0.0;
        for (const Term& t : terms) s += t.coefficient * (t.q - 1.0) * std::pow(u, t.q - 2.0);
        return s;
    };
    nl.theta_ = theta.value_or(qmin);
    nl.p_ = p.value_or(qmax + 1.0);
    return nl;
}

Nonlinearity Nonlinearity::custom(std::string name, Fn f, Fn primitive, Fn derivative, double theta,
                                  double p) {
    Nonlinearity nl;
    nl.name_ = std::move(name);
    nl.f_ = std::move(f);
    nl.primitive_ = std::move(primitive);
    nl.derivative_ = std::move(derivative);
    nl.theta_ = theta;
    nl.p_ = p;
    return nl;
}

Nonlinearity Nonlinearity::scaled(double c) const {
    if (!(c > 0.0)) throw std::invalid_argument("nonlinearity scale must be positive");
    if (c == 1.0) return *this;
    Nonlinearity nl = *this;
    if (!nl.terms_.empty()) {
        for (Term& t : nl.terms_) t.coefficient *= c;
        return combined(nl.terms_, theta_, p_);
    }
    nl.name_ = fmt(c) + "*(" + name_ + ")";
    nl.f_ = [c, f = f_](double u) { return c * f(u); };
    nl.primitive_ = [c, F = primitive_](double u) { return c * F(u); };
    nl.derivative_ = [c, d = derivative_](double u) { return c * d(u); };
    return nl;
}

// ---------------------------------------------------------------------------
// Coefficients

Coefficient Coefficient::constant(double value) {
    return {"constant", [value](const Coord&) { return value; }, std::nullopt};
}

Coefficient Coefficient::cosine(int dim, double base, double amplitude, double period, const Coord& center) {
    if (!(period > 0.0)) throw std::invalid_argument("cosine coefficient needs a positive period");
    const double w = 2.0 * std::numbers::pi / period;
    return {"cosine",
            [=](const Coord& x) {
                double s = 0.0;
                for (int a = 0; a < dim; ++a) s += 1.0 - std::cos(w * (x[a] - center[a]));
                return base + amplitude * s;
            },
            period};
}

Coefficient Coefficient::gaussian_well(int dim, double base, double depth, double width, const Coord& center) {
    if (!(width > 0.0)) throw std::invalid_argument("gaussian well needs a positive width");
    return {"gaussian_well",
            [=](const Coord& x) {
                double r2 = 0.0;
                for (int a = 0; a < dim; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
                return base - depth * std::exp(-r2 / (2.0 * width * width));
            },
            std::nullopt};
}

Coefficient Coefficient::scaled(double c) const {
    Coefficient out = *this;
    if (c != 1.0) out.eval = [c, e = eval](const Coord& x) { return e(x) * c; };
    return out;
}

std::string to_string(ConcentrationCase c) { return c == ConcentrationCase::Lambda1 ? "lambda1" : "lambda2"; }

// ---------------------------------------------------------------------------
// Problem assembly and validation

ProblemSpec make_problem(const ProblemInputs& in, const Grid& grid) {
    if (in.dim != grid.dim()) throw std::invalid_argument("problem and grid dimensions differ");
    in.region.require_inside(grid);
    if (!in.region.contains(in.anchor)) {
        throw std::invalid_argument("anchor point must lie inside the concentration region");
    }

    ProblemSpec p;
    p.dim = in.dim;
    p.region = in.region;
    p.which = in.which;
    p.anchor = in.anchor;

    double vmin = std::numeric_limits<double>::infinity();
    double gmax = in.Gamma(in.anchor);
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Coord x = grid.coord(n);
        vmin = std::min(vmin, in.V(x));
        gmax = std::max(gmax, in.Gamma(x));
    }

    p.V = in.V;
    p.alpha = in.alpha.value_or(vmin);
    if (in.normalize_gamma) {
        if (!(gmax > 0.0)) throw std::invalid_argument("Gamma must be positive to normalize");
        p.gamma_scale = gmax;
        p.Gamma = in.Gamma.scaled(1.0 / gmax);
        p.nonlinearity = in.nonlinearity.scaled(gmax);
    } else {
        p.gamma_scale = 1.0;
        p.Gamma = in.Gamma;
        p.nonlinearity = in.nonlinearity;
    }

    double gmin = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < grid.size(); ++n) gmin = std::min(gmin, p.Gamma(grid.coord(n)));
    p.beta = in.beta.value_or(gmin);
    return p;
}

bool ConditionReport::passed() const {
    return std::all_of(results.begin(), results.end(), [](const ConditionResult& r) { return r.passed; });
}

const ConditionResult* ConditionReport::first_failure() const {
    for (const auto& r : results) {
        if (!r.passed) return &r;
    }
    return nullptr;
}

ConditionReport check_nonlinearity(const Nonlinearity& f, int dim) {
    ConditionReport report;

    {
        ConditionResult r{"exponents"};
        const double theta = f.theta();
        const double p = f.p();
        if (!(theta > 2.0 && theta <= p && std::isfinite(p))) {
            r.passed = false;
            r.detail = "need 2 < theta <= p < inf, got theta=" + fmt(theta) + " p=" + fmt(p);
        } else if (dim >= 3 && !(p < 2.0 * dim / (dim - 2.0))) {
            r.passed = false;
            r.detail = "p must be below the critical exponent 2N/(N-2)";
        } else {
            r.detail = "2 < theta=" + fmt(theta) + " <= p=" + fmt(p);
        }
        report.add(r);
    }

    {
        // f(u)/u must shrink toward 0 along u -> 0+.
        ConditionResult r{"F1", true, "f(u)/u decreases to 0 on [1e-30, 1]"};
        const auto us = geometric(1.0, 1e-30, 121);
        const double first = f.f(us.front()) / us.front();
        double prev = first;
        for (double u : us) {
            const double ratio = f.f(u) / u;
            if (!std::isfinite(ratio) || !leq(ratio, prev)) {
                r = {"F1", false, "f(u)/u increased toward 0: " + fmt(ratio) + " > " + fmt(prev), {}, u};
                break;
            }
            prev = ratio;
        }
        if (r.passed && !(prev <= 0.1 * first)) {
            r = {"F1", false, "f(u)/u does not approach 0 (ratio " + fmt(prev) + " at u=1e-30)", {}, us.back()};
        }
        report.add(r);
    }

    {
        ConditionResult r{"F2", true, "f(u)/u^(p-1) decreases to 0 on [1, 1e12]"};
        const auto us = geometric(1.0, 1e12, 121);
        const double p = f.p();
        std::vector<double> ratios;
        for (double u : us) ratios.push_back(f.f(u) / std::pow(u, p - 1.0));
        const double peak = *std::max_element(ratios.begin(), ratios.end());
        for (std::size_t i = ratios.size() / 2 + 1; i < ratios.size(); ++i) {
            if (!std::isfinite(ratios[i]) || !leq(ratios[i], ratios[i - 1])) {
                r = {"F2", false, "f(u)/u^(p-1) grows in the tail", {}, us[i]};
                break;
            }
        }
        if (r.passed && !(ratios.back() <= 0.1 * peak)) {
            r = {"F2", false, "f(u)/u^(p-1) does not approach 0 (ratio " + fmt(ratios.back()) + ")", {},
                 us.back()};
        }
        report.add(r);
    }

    const auto sample = geometric(1e-6, 1e6, 121);
    {
        ConditionResult r{"F3", true, "0 < theta F(u) <= f(u) u on [1e-6, 1e6]"};
        for (double u : sample) {
            const double lhs = f.theta() * f.F(u);
            const double rhs = f.f(u) * u;
            if (!(lhs > 0.0) || !leq(lhs, rhs)) {
                r = {"F3", false, "theta F(u)=" + fmt(lhs) + " vs f(u)u=" + fmt(rhs), {}, u};
                break;
            }
        }
        report.add(r);
    }
    {
        ConditionResult r{"F4", true, "f(u)/u nondecreasing on [1e-6, 1e6]"};
        double prev = 0.0;
        for (double u : sample) {
            const double ratio = f.f(u) / u;
            if (!leq(prev, ratio)) {
                r = {"F4", false, "f(u)/u decreased to " + fmt(ratio) + " from " + fmt(prev), {}, u};
                break;
            }
            prev = ratio;
        }
        report.add(r);
    }
    return report;
}

namespace {

void check_period(ConditionReport& report, const char* label, const Coefficient& c, const Grid& grid,
                  bool required) {
    ConditionResult r{std::string("period_") + label};
    if (c.kind == "constant") {
        r.detail = std::string(label) + " is constant (periodic for every period)";
        report.add(r);
        return;
    }
    if (!c.period) {
        if (required) {
            r.passed = false;
            r.detail = std::string(label) + " must be periodic in this case but declares no period";
            report.add(r);
        }
        return;
    }
    const double P = *c.period;
    r.detail = std::string(label) + " matches its declared period " + fmt(P) + " on sampled nodes";
    for (std::size_t n = 0; n < grid.size() && r.passed; ++n) {
        const Coord x = grid.coord(n);
        for (int a = 0; a < grid.dim(); ++a) {
            Coord y = x;
            y[a] += P;
            if (!grid.contains(y)) continue;
            const double vx = c(x);
            const double vy = c(y);
            if (std::abs(vx - vy) > 1e-10 * std::max(1.0, std::abs(vx))) {
                r.passed = false;
                r.detail = std::string(label) + " differs across one declared period";
                r.x = x;
                break;
            }
        }
    }
    report.add(r);
}

}  // namespace

ConditionReport check_problem(const ProblemSpec& problem, const Grid& grid, double band_width) {
    ConditionReport report;
    const int dim = problem.dim;

    {
        ConditionResult r{"V", true, "V(x) >= alpha=" + fmt(problem.alpha) + " > 0 at all nodes"};
        if (!(problem.alpha > 0.0)) {
            r = {"V", false, "alpha must be positive, got " + fmt(problem.alpha)};
        } else {
            for (std::size_t n = 0; n < grid.size(); ++n) {
                const Coord x = grid.coord(n);
                const double v = problem.V(x);
                if (!std::isfinite(v) || v < problem.alpha) {
                    r = {"V", false, "V(x)=" + fmt(v) + " below alpha=" + fmt(problem.alpha) + " at x=" + fmt(x, dim), x};
                    break;
                }
            }
        }
        report.add(r);
    }
    {
        ConditionResult r{"Gamma", true, "beta=" + fmt(problem.beta) + " <= Gamma(x) <= 1 at all nodes"};
        if (!(problem.beta > 0.0)) {
            r = {"Gamma", false, "beta must be positive, got " + fmt(problem.beta)};
        } else {
            for (std::size_t n = 0; n < grid.size(); ++n) {
                const Coord x = grid.coord(n);
                const double gx = problem.Gamma(x);
                if (!std::isfinite(gx) || gx < problem.beta || gx > 1.0 + kRel) {
                    r = {"Gamma", false,
                         "Gamma(x)=" + fmt(gx) + " outside [beta, 1] (|Gamma|_inf must be 1) at x=" + fmt(x, dim), x};
                    break;
                }
            }
        }
        report.add(r);
    }

    // Case condition, sampled on the grid nodes and the anchor.
    {
        const bool l1 = problem.which == ConcentrationCase::Lambda1;
        ConditionResult r{l1 ? "Lambda1" : "Lambda2"};
        const Coord& x0 = problem.anchor;
        // Lambda1: the well of V in the region; Lambda2: the peak of Gamma.
        const auto& local = l1 ? problem.V : problem.Gamma;
        const auto& global = l1 ? problem.Gamma : problem.V;
        const double sign = l1 ? 1.0 : -1.0;  // minimize sign*local
        const double local0 = local(x0);
        const double global0 = global(x0);
        r.detail = l1 ? "V(x_min) = inf_Lambda V < min_dLambda V and Gamma(x_min) = sup Gamma"
                      : "Gamma(x_max) = sup_Lambda Gamma > max_dLambda Gamma and V(x_max) = inf V";
        if (!problem.region.contains(x0)) {
            r.passed = false;
            r.detail = "anchor " + fmt(x0, dim) + " is not inside the region";
        }
        std::vector<std::size_t> band;
        if (r.passed) {
            try {
                band = boundary_band(grid, problem.region, band_width);
            } catch (const std::exception& e) {
                r.passed = false;
                r.detail = e.what();
            }
        }
        if (r.passed) {
            std::vector<char> in_band(grid.size(), 0);
            for (std::size_t n : band) in_band[n] = 1;
            double band_extreme = std::numeric_limits<double>::infinity();
            for (std::size_t n : band) band_extreme = std::min(band_extreme, sign * local(grid.coord(n)));
            for (std::size_t n = 0; n < grid.size() && r.passed; ++n) {
                const Coord x = grid.coord(n);
                if (problem.region.contains(x) && !leq(sign * local0, sign * local(x))) {
                    r.passed = false;
                    r.detail = std::string(l1 ? "V" : "Gamma") + " at anchor is not extremal in the region; node x=" +
                               fmt(x, dim) + " does better";
                    r.x = x;
                }
                if (r.passed && !leq(-sign * global(x), -sign * global0) ) {
                    r.passed = false;
                    r.detail = std::string(l1 ? "Gamma" : "V") + " at anchor is not globally extremal; node x=" +
                               fmt(x, dim) + " does better";
                    r.x = x;
                }
            }
            // Strict separation from the boundary band.
            if (r.passed && !(sign * local0 < band_extreme)) {
                r.passed = false;
                r.detail = std::string(l1 ? "inf_Lambda V is not below min over the boundary"
                                          : "sup_Lambda Gamma is not above max over the boundary");
            }
        }
        report.add(r);
        // Lambda1 needs Gamma periodic; Lambda2 needs V periodic.
        check_period(report, "V", problem.V, grid, !l1);
        check_period(report, "Gamma", problem.Gamma, grid, l1);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Truncation level and penalization

double compute_truncation_level(const Nonlinearity& f, double alpha, double k) {
    const double target = alpha / k;
    if (!(target > 0.0) || !std::isfinite(target)) throw std::invalid_argument("alpha/k must be positive");
    auto excess = [&](double u) { return f.f(u) / u - target; };
    double lo = 1e-12;
    double hi = 1e12;
    if (!(excess(hi) >= 0.0) || !(excess(lo) < 0.0)) {
        throw std::runtime_error("nonlinearity never reaches slope alpha/k on [1e-12, 1e12]");
    }
    // Geometric bisection first (the bracket spans 24 decades), then arithmetic.
    for (int it = 0; it < 200 && hi / lo > 2.0; ++it) {
        const double mid = std::sqrt(lo * hi);
        (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    const double a = std::abs(excess(lo)) <= std::abs(excess(hi)) ? lo : hi;
    if (std::abs(excess(a)) > 1e-12 * target) {
        throw std::runtime_error("truncation level residual too large: f(u)/u jumps across alpha/k");
    }
    return a;
}

PenalizedNonlinearity::PenalizedNonlinearity(Nonlinearity base, double alpha, double k)
    : PenalizedNonlinearity(std::move(base), alpha, k, true) {}

PenalizedNonlinearity PenalizedNonlinearity::unpenalized(Nonlinearity base, double alpha, double k) {
    return PenalizedNonlinearity(std::move(base), alpha, k, false);
}

PenalizedNonlinearity::PenalizedNonlinearity(Nonlinearity base, double alpha, double k, bool penalize)
    : base_(std::move(base)), alpha_(alpha), k_(k), slope_(alpha / k), a_(0.0), penalize_(penalize) {
    const double theta = base_.theta();
    if (!(theta > 2.0)) throw std::invalid_argument("theta must exceed 2");
    if (!(k > theta / (theta - 2.0))) {
        throw std::invalid_argument("k=" + fmt(k) + " must exceed theta/(theta-2)=" + fmt(theta / (theta - 2.0)));
    }
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    a_ = compute_truncation_level(base_, alpha, k);
}

ConditionReport check_G_properties(const PenalizedNonlinearity& pen, const ProblemSpec& problem,
                                   const Grid& grid, const GLatticeOptions& opts) {
    ConditionReport report;
    const int dim = problem.dim;
    const double a = pen.a();
    const double theta = pen.base().theta();
    const double p = pen.base().p();
    const double k = pen.k();

    struct Site {
        Coord x;
        double V, Gamma;
        bool inside;
    };
    std::vector<Site> sites;
    const std::size_t nx = std::min(opts.x_samples, grid.size());
    for (std::size_t s = 0; s < nx; ++s) {
        const std::size_t n = nx > 1 ? s * (grid.size() - 1) / (nx - 1) : 0;
        const Coord x = grid.coord(n);
        sites.push_back({x, problem.V(x), problem.Gamma(x), problem.region.contains(x)});
    }
    // Make sure both sides of the region boundary are represented.
    sites.push_back({problem.anchor, problem.V(problem.anchor), problem.Gamma(problem.anchor), true});

    const auto us = geometric(opts.u_min_factor * a, opts.u_max_factor * a, opts.u_samples);
    const auto toward_zero = geometric(a, 1e-30 * a, 61);
    const auto toward_inf = geometric(a, 1e12 * std::max(a, 1.0), 61);

    ConditionResult g1{"G1", true, "g(x,u)/u -> 0 as u -> 0+ uniformly on sampled x"};
    ConditionResult g2{"G2", true, "g(x,u)/u^(p-1) -> 0 as u -> inf uniformly on sampled x"};
    ConditionResult g3{"G3", true,
                       "inside: 0 < theta G <= g u; outside: 0 <= 2G <= g u <= V u^2 / k, on the lattice"};
    ConditionResult g4{"G4", true, "g/u nondecreasing; constant = Gamma alpha/k on [a, inf) outside"};

    auto fail = [&](ConditionResult& r, const Site& s, double u, const std::string& why) {
        if (!r.passed) return;
        r.passed = false;
        r.detail = why + " at x=" + fmt(s.x, dim) + (s.inside ? " (inside)" : " (outside)") + ", u=" + fmt(u);
        r.x = s.x;
        r.u = u;
    };

    for (const Site& s : sites) {
        {
            const double first = pen.g(s.Gamma, s.inside, toward_zero.front()) / toward_zero.front();
            double prev = first;
            for (double u : toward_zero) {
                const double ratio = pen.g(s.Gamma, s.inside, u) / u;
                if (!leq(ratio, prev)) fail(g1, s, u, "g/u grew toward 0");
                prev = ratio;
            }
            if (!(prev <= 0.1 * first)) fail(g1, s, toward_zero.back(), "g/u does not vanish");
        }
        {
            std::vector<double> ratios;
            for (double u : toward_inf) ratios.push_back(pen.g(s.Gamma, s.inside, u) / std::pow(u, p - 1.0));
            const double peak = *std::max_element(ratios.begin(), ratios.end());
            for (std::size_t i = ratios.size() / 2 + 1; i < ratios.size(); ++i) {
                if (!leq(ratios[i], ratios[i - 1])) fail(g2, s, toward_inf[i], "g/u^(p-1) grows in the tail");
            }
            if (!(ratios.back() <= 0.1 * peak)) fail(g2, s, toward_inf.back(), "g/u^(p-1) does not vanish");
        }
        double prev_ratio = 0.0;
        for (double u : us) {
            const double g = pen.g(s.Gamma, s.inside, u);
            const double G = pen.G(s.Gamma, s.inside, u);
            const double gu = g * u;
            if (s.inside) {
                if (!(theta * G > 0.0) || !leq(theta * G, gu)) fail(g3, s, u, "theta G <= g u violated");
            } else {
                if (!(G >= 0.0) || !leq(2.0 * G, gu)) fail(g3, s, u, "2G <= g u violated");
                if (!leq(gu, s.V * u * u / k)) fail(g3, s, u, "g u <= V u^2 / k violated");
            }
            const double ratio = g / u;
            if (!leq(prev_ratio, ratio)) fail(g4, s, u, "g/u decreased");
            prev_ratio = ratio;
            if (!s.inside && u >= a) {
                const double expected = s.Gamma * pen.slope();
                if (std::abs(ratio - expected) > 1e-14 * expected) fail(g4, s, u, "g/u not constant above a");
            }
        }
    }
    report.add(g1);
    report.add(g2);
    report.add(g3);
    report.add(g4);
    return report;
}

}  // namespace pnls
