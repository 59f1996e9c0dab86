#pragma once

// Positive critical points of the penalized energy by gradient flow in the
// Q_hbar metric: each step solves (-hbar^2 Lap_h + V) d = r with conjugate
// gradients, projects onto u >= 0 and rescales onto the Nehari set.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "pnls/functional.hpp"

namespace pnls {

enum class Preconditioner {
    Auto,         // Tridiagonal in 1D, Jacobi otherwise
    Jacobi,
    Tridiagonal,  // exact line solve; 1D only
};

struct SolverParams {
    int max_outer = 2000;
    double tol_residual = 1e-9;
    double step = 1.0;
    double cg_tol = 1e-10;
    int cg_max = 20000;
    std::uint64_t seed = 0;
    /// Number of initial guesses tried; starts after the first add seeded noise.
    int starts = 1;
    double backtrack = 0.5;
    double step_growth = 1.1;
    double min_step = 1e-10;
    double width_factor = 1.0;
    /// Add Polak-Ribiere conjugate directions to the preconditioned gradient.
    bool conjugate = true;
    /// Cap on the secant step along a conjugate direction, relative to the accepted step.
    double max_stretch = 50.0;
    Preconditioner preconditioner = Preconditioner::Auto;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

struct SolveResult {
    ScalarField u;
    double level = 0.0;
    EnergyBreakdown breakdown;
    double residual_norm = 0.0;
    int iterations = 0;
    double m = 0.0;  // max of u over the boundary band
    std::size_t argmax_index = 0;
    Coord argmax_point{};
    double argmax_value = 0.0;
    double V_at_argmax = 0.0;
    double Gamma_at_argmax = 0.0;
    double nehari_t = 1.0;
    /// max over box-edge nodes of u divided by max u
    double edge_ratio = 0.0;
    bool converged = false;
};

struct IterationInfo {
    int iteration;
    double energy;
    double residual_norm;
    double step;
    double min_value;
};

using IterationObserver = std::function<void(const IterationInfo&)>;

class CgError : public std::runtime_error {
public:
    CgError(const std::string& what, double achieved) : std::runtime_error(what), achieved_(achieved) {}
    double achieved() const { return achieved_; }

private:
    double achieved_;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unit-height Gaussian exp(-|x - anchor|^2 / (2 (width_factor hbar)^2)).
ScalarField initial_guess(const Coord& anchor, double hbar, GridPtr grid, double width_factor = 1.0);

/// Solves (-hbar^2 Lap_h + V) z = rhs to relative residual cg_tol. Throws
/// CgError after cg_max iterations.
ScalarField cg_solve(double hbar, const DiscreteProblem& problem, const ScalarField& rhs,
                     const SolverParams& params);

/// Quadrature-norm relative residual ||r|| / ||u||.
double relative_residual(const Functional& phi, const ScalarField& u);

/// Descent from `start` (initial_guess at the anchor when empty).
SolveResult solve(const DiscreteProblem& problem, const PenalizedNonlinearity& pen, double hbar,
                  const SolverParams& params, std::optional<ScalarField> start = std::nullopt,
                  const IterationObserver& observer = {});

/// Fills the diagnostic fields of a result from its field u.
void fill_diagnostics(SolveResult& result, const Functional& phi);

}  // namespace pnls
