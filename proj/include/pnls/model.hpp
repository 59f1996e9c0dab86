#pragma once

// Problem definition for  -hbar^2 Lap u + V(x) u = Gamma(x) f(u)  and the
// penalized nonlinearity g(x, u) that replaces f by an asymptotically linear
// truncation outside the concentration region.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pnls/grid.hpp"

namespace pnls {

/// Base nonlinearity f on (0, inf), extended by 0 for u <= 0.
class Nonlinearity {
public:
    struct Term {
        double coefficient;
        double q;  // contributes coefficient * u^(q-1) to f
    };

    using Fn = std::function<double(double)>;

    /// f(u) = u^(q-1). Defaults: theta = q, p = q + 1.
    static Nonlinearity power(double q, std::optional<double> theta = {}, std::optional<double> p = {});
    /// f(u) = sum c_i u^(q_i - 1) with c_i > 0. Defaults: theta = min q_i, p = max q_i + 1.
    static Nonlinearity combined(std::vector<Term> terms, std::optional<double> theta = {},
                                 std::optional<double> p = {});
    /// Arbitrary f with its primitive and derivative; no shape checks here.
    static Nonlinearity custom(std::string name, Fn f, Fn primitive, Fn derivative, double theta, double p);

    double f(double u) const { return u > 0.0 ? f_(u) : 0.0; }
    double F(double u) const { return u > 0.0 ? primitive_(u) : 0.0; }
    double fprime(double u) const { return u > 0.0 ? derivative_(u) : 0.0; }

    double theta() const { return theta_; }
    double p() const { return p_; }
    const std::string& name() const { return name_; }
    const std::vector<Term>& terms() const { return terms_; }

    /// The nonlinearity c*f, used by the Gamma normalization.
    Nonlinearity scaled(double c) const;

private:
    Nonlinearity() = default;
    std::string name_;
    std::vector<Term> terms_;
    Fn f_, primitive_, derivative_;
    double theta_ = 0.0;
    double p_ = 0.0;
};

/// A coefficient sampler from the built-in library, with its declared period.
struct Coefficient {
    std::string kind;
    std::function<double(const Coord&)> eval;
    std::optional<double> period;

    double operator()(const Coord& x) const { return eval(x); }

    static Coefficient constant(double value);
    /// base + amplitude * sum_axes (1 - cos(2 pi (x_a - center_a) / period)).
    static Coefficient cosine(int dim, double base, double amplitude, double period, const Coord& center);
    /// base - depth * exp(-|x - center|^2 / (2 width^2)).
    static Coefficient gaussian_well(int dim, double base, double depth, double width, const Coord& center);

    Coefficient scaled(double c) const;
};

enum class ConcentrationCase { Lambda1, Lambda2 };

std::string to_string(ConcentrationCase c);

struct ProblemSpec {
    int dim = 1;
    Coefficient V;
    Coefficient Gamma;
    double alpha = 0.0;
    double beta = 0.0;
    Region region = Region::box(1, {0.0, 0.0}, {1.0, 1.0});
    Nonlinearity nonlinearity = Nonlinearity::power(4.0);
    ConcentrationCase which = ConcentrationCase::Lambda1;
    /// x_min for Lambda1, x_max for Lambda2.
    Coord anchor{};
    /// Factor by which Gamma was divided (and f multiplied) to make sup Gamma = 1.
    double gamma_scale = 1.0;
};

struct ProblemInputs {
    int dim = 1;
    Coefficient V;
    Coefficient Gamma;
    bool normalize_gamma = true;
    std::optional<double> alpha;
    std::optional<double> beta;
    Region region = Region::box(1, {0.0, 0.0}, {1.0, 1.0});
    Nonlinearity nonlinearity = Nonlinearity::power(4.0);
    ConcentrationCase which = ConcentrationCase::Lambda1;
    Coord anchor{};
};

/// Resolves defaults against the sampling grid: alpha = min V, Gamma
/// rescaled so that its sampled maximum is 1 (f absorbs the factor),
/// beta = min Gamma after rescaling.
ProblemSpec make_problem(const ProblemInputs& in, const Grid& grid);

struct ConditionResult {
    std::string name;
    bool passed = true;
    std::string detail;
    std::optional<Coord> x;
    std::optional<double> u;
};

struct ConditionReport {
    std::vector<ConditionResult> results;
    bool passed() const;
    const ConditionResult* first_failure() const;
    void add(ConditionResult r) { results.push_back(std::move(r)); }
};

/// Sampled checks of (F1)-(F4) and the exponent constraints.
ConditionReport check_nonlinearity(const Nonlinearity& f, int dim);

/// Sampled checks of (V), (Gamma) with |Gamma|_inf = 1, the case condition
/// (Lambda1 or Lambda2) at the grid nodes, and declared periods.
ConditionReport check_problem(const ProblemSpec& problem, const Grid& grid, double band_width);

/// Solves f(a)/a = alpha/k by bracketing and bisection on the nondecreasing
/// map u -> f(u)/u. Throws std::runtime_error if no bracket exists in
/// [1e-12, 1e12].
double compute_truncation_level(const Nonlinearity& f, double alpha, double k);

class PenalizedNonlinearity {
public:
    /// Throws std::invalid_argument unless k > theta / (theta - 2) and alpha > 0.
    PenalizedNonlinearity(Nonlinearity base, double alpha, double k);

    /// g = Gamma f everywhere (no truncation). Used for limit problems.
    static PenalizedNonlinearity unpenalized(Nonlinearity base, double alpha, double k);

    static double default_k(double theta) { return 2.0 * theta / (theta - 2.0); }

    const Nonlinearity& base() const { return base_; }
    double k() const { return k_; }
    double a() const { return a_; }
    double alpha() const { return alpha_; }
    /// alpha / k
    double slope() const { return slope_; }
    bool penalizes() const { return penalize_; }

    double f_tilde(double u) const { return u > a_ ? slope_ * u : base_.f(u); }

    double g(double gamma, bool in_region, double u) const {
        if (u <= 0.0) return 0.0;
        if (in_region || !penalize_ || u <= a_) return gamma * base_.f(u);
        return gamma * (slope_ * u);
    }

    /// Exact antiderivative of g in u.
    double G(double gamma, bool in_region, double u) const {
        if (u <= 0.0) return 0.0;
        if (in_region || !penalize_ || u <= a_) return gamma * base_.F(u);
        return gamma * (base_.F(a_) + 0.5 * slope_ * (u * u - a_ * a_));
    }

private:
    PenalizedNonlinearity(Nonlinearity base, double alpha, double k, bool penalize);

    Nonlinearity base_;
    double alpha_;
    double k_;
    double slope_;
    double a_;
    bool penalize_;
};

struct GLatticeOptions {
    std::size_t x_samples = 64;
    std::size_t u_samples = 64;
    double u_min_factor = 1e-4;  // u lattice spans [u_min_factor*a, u_max_factor*a]
    double u_max_factor = 1e4;
};

/// Verifies (G1)-(G4) on an (x, u) lattice over the grid nodes.
ConditionReport check_G_properties(const PenalizedNonlinearity& pen, const ProblemSpec& problem,
                                   const Grid& grid, const GLatticeOptions& opts = {});

}  // namespace pnls
