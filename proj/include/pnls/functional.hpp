#pragma once

// The penalized energy
//   Phi(u) = hbar^2/2 int |grad u|^2 + 1/2 int V u^2 - int G(x, u),
// its gradient, and the ray maximization t -> Phi(t u) that defines the
// mountain-pass level.

#include <cstddef>
#include <vector>

#include "pnls/grid.hpp"
#include "pnls/model.hpp"

namespace pnls {

/// Coefficients of a problem sampled at the nodes of one grid.
struct DiscreteProblem {
    GridPtr grid;
    std::vector<double> V;
    std::vector<double> Gamma;
    std::vector<char> in_region;
    /// Nodes standing in for the region boundary.
    std::vector<std::size_t> band;
    Coord anchor{};

    static DiscreteProblem sample(const ProblemSpec& problem, GridPtr grid, double band_width);
};

/// out = (-hbar^2 Lap_h + V) u
void apply_linear(double hbar, const DiscreteProblem& problem, const ScalarField& u, ScalarField& out);

struct EnergyBreakdown {
    double kinetic = 0.0;    // hbar^2/2 int |grad u|^2
    double potential = 0.0;  // 1/2 int V u^2
    double nonlinear = 0.0;  // int G(x, u)
    double total = 0.0;
    double Q = 0.0;          // int hbar^2 |grad u|^2 + V u^2
};

class Functional {
public:
    Functional(const DiscreteProblem& problem, const PenalizedNonlinearity& pen, double hbar);

    double hbar() const { return hbar_; }
    const DiscreteProblem& problem() const { return *problem_; }
    const PenalizedNonlinearity& penalization() const { return *pen_; }

    EnergyBreakdown energy(const ScalarField& u) const;
    double value(const ScalarField& u) const { return energy(u).total; }

    /// Q_hbar(u), the squared energy norm of the linear part.
    double quadratic_form(const ScalarField& u) const;
    /// int g(x, u) u
    double nonlinear_pairing(const ScalarField& u) const;

    /// Nodewise r = -hbar^2 Lap_h u + V u - g(x, u).
    ScalarField residual(const ScalarField& u) const;

    /// (-hbar^2 Lap_h + V) u
    void apply_linear(const ScalarField& u, ScalarField& out) const;

    /// Maximizer t* > 0 of t -> Phi(t u). Throws NehariError when the ray has
    /// no interior maximum below t_max.
    double nehari_scale(const ScalarField& u, double rel_tol = 1e-12, double t_max = 1e9) const;

private:
    const DiscreteProblem* problem_;
    const PenalizedNonlinearity* pen_;
    double hbar_;
};

class NehariError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pnls
