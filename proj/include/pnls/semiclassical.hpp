#pragma once

// The hbar -> 0 experiment layer: limit problems, sweeps with per-hbar
// diagnostics, the check that a penalized solution solves the original
// equation, and exponential tail fits.

#include <optional>
#include <string>
#include <vector>

#include "pnls/solver.hpp"

namespace pnls {

struct LimitResult {
    ScalarField w;
    double level = 0.0;  // the limit level (c underbar)
    ConcentrationCase which = ConcentrationCase::Lambda1;
    double V0 = 0.0;      // min_Lambda V, case Lambda1
    double Gamma0 = 0.0;  // max_Lambda Gamma, case Lambda2
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    double edge_ratio = 0.0;
};

/// min over region nodes (and the anchor) of V.
double region_min_V(const ProblemSpec& problem, const DiscreteProblem& discrete);
/// max over region nodes (and the anchor) of Gamma.
double region_max_Gamma(const ProblemSpec& problem, const DiscreteProblem& discrete);

/// Solves the unpenalized limit problem at hbar = 1 on `grid`:
///   Lambda1:  -Lap w + V0 w = Gamma(x) f(w)
///   Lambda2:  -Lap w + V(x) w = Gamma0 f(w)
/// V0 / Gamma0 are taken from `discrete`, the sampling of the original problem.
LimitResult solve_limit_problem(const ProblemSpec& problem, const DiscreteProblem& discrete, GridPtr grid,
                                const SolverParams& params);

struct CertificationReport {
    bool boundary_below_a = false;     // m < a
    bool outside_below_a = false;      // u <= a + 1e-8 off the region
    bool coefficient_positive = false; // V - g/u >= alpha (1 - 1/k) - 1e-10 off the region
    bool residuals_agree = false;      // original and penalized residuals bitwise equal
    double m = 0.0;
    double a = 0.0;
    double max_outside = 0.0;
    double min_coefficient = 0.0;
    double coefficient_floor = 0.0;
    double original_residual_norm = 0.0;
    double penalized_residual_norm = 0.0;
    std::optional<std::size_t> failing_node;
    std::optional<Coord> failing_point;
    std::string failing_check;

    bool solves_original() const {
        return boundary_below_a && outside_below_a && coefficient_positive && residuals_agree;
    }
};

/// Nodewise residual of the original equation, -hbar^2 Lap_h u + V u - Gamma f(u).
ScalarField original_residual(const ScalarField& u, const DiscreteProblem& problem,
                              const PenalizedNonlinearity& pen, double hbar);

CertificationReport certify_original(const SolveResult& result, const DiscreteProblem& problem,
                                     const PenalizedNonlinearity& pen, double hbar);

struct DecayFit {
    double C = 0.0;
    double rate = 0.0;
    std::size_t samples = 0;
};

/// Least-squares fit of log u against |x - center| on nodes with
/// |x - center| in [r1, r2]. Throws std::runtime_error with fewer than 8
/// window nodes and std::invalid_argument on a bad window or u <= 1e-14.
DecayFit decay_fit(const ScalarField& u, const Coord& center, double r1, double r2);

/// v(y) = u(center + hbar y) on the nodes y of `target`, linearly interpolated.
ScalarField rescale_to_limit(const ScalarField& u, const Coord& center, double hbar, GridPtr target);

/// u_next(x) = u(anchor + ratio (x - anchor)) on the same grid.
ScalarField contract_toward(const ScalarField& u, const Coord& anchor, double ratio);

struct SweepOptions {
    bool warm_start = true;
    /// Lemma threshold on argmax values; defaults to a.
    std::optional<double> b;
    /// Decay window in units of hbar.
    double decay_r1 = 3.0;
    double decay_r2 = 8.0;
    /// Relative tolerance band for level_scaled against the limit level.
    double level_band = 0.05;
    std::optional<double> limit_level;
    /// Maximum worker threads when warm starting is off.
    int threads = 1;
};

struct SweepRecord {
    double hbar = 0.0;
    double level_scaled = 0.0;
    double Q_scaled = 0.0;
    double m = 0.0;
    Coord argmax_point{};
    double argmax_value = 0.0;
    double V_at_argmax = 0.0;
    double Gamma_at_argmax = 0.0;
    bool solves_original = false;
    double decay_rate = 0.0;
    bool converged = false;
    double residual_norm = 0.0;
    int iterations = 0;
    std::string error;
    CertificationReport certification;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    std::vector<std::string> warnings;
    /// Solutions in record order (empty fields for failed entries).
    std::vector<ScalarField> solutions;
};

/// hbars must be strictly decreasing. Individual failures are recorded.
SweepResult sweep(const ProblemSpec& problem, const DiscreteProblem& discrete, const PenalizedNonlinearity& pen,
                  const std::vector<double>& hbars, const SolverParams& params, const SweepOptions& opts = {});

struct LemmaCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct LemmaBands {
    double level_band = 0.05;   // level_scaled <= limit * (1 + band) at the two smallest hbar
    double q_ratio_max = 10.0;  // max/min Q_scaled
    double q_trend_max = 0.05;  // slope of log Q_scaled against log(1/hbar)
    double m_fraction = 0.1;    // m at the smallest hbar below this fraction of a
};

/// Numerical forms of the concentration lemmas evaluated on a finished sweep.
std::vector<LemmaCheck> check_lemmas(const SweepResult& sweep, const LimitResult& limit,
                                     const PenalizedNonlinearity& pen, double b, const LemmaBands& bands = {});

}  // namespace pnls
