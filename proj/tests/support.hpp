#pragma once

#include <cmath>
#include <memory>
#include <random>

#include "pnls/semiclassical.hpp"

namespace pnls::testing {

/// A sampled problem with its penalization, kept alive together.
struct Setup {
    GridPtr grid;
    ProblemSpec problem;
    DiscreteProblem discrete;
    std::shared_ptr<PenalizedNonlinearity> pen;
};

inline GridPtr line(double lo, double hi, std::size_t n) { return make_grid({lo}, {hi}, {n}); }

/// -hbar^2 u'' + V0 u = Gamma0 u^3 type problems on a 1D box, region (-half, half).
inline Setup constant_1d(GridPtr grid, double V0 = 1.0, double Gamma0 = 1.0, double half = 1.0, double q = 4.0,
                         bool penalize = true) {
    ProblemInputs in;
    in.dim = 1;
    in.V = Coefficient::constant(V0);
    in.Gamma = Coefficient::constant(Gamma0);
    in.normalize_gamma = false;
    in.region = Region::box(1, {0.0, 0.0}, {half, 0.0});
    in.nonlinearity = Nonlinearity::power(q);
    Setup s;
    s.grid = grid;
    s.problem = make_problem(in, *grid);
    s.discrete = DiscreteProblem::sample(s.problem, grid, grid->max_spacing());
    const double k = PenalizedNonlinearity::default_k(s.problem.nonlinearity.theta());
    s.pen = std::make_shared<PenalizedNonlinearity>(
        penalize ? PenalizedNonlinearity(s.problem.nonlinearity, s.problem.alpha, k)
                 : PenalizedNonlinearity::unpenalized(s.problem.nonlinearity, s.problem.alpha, k));
    return s;
}

/// Same problem with every node treated as inside the region (no truncation active).
inline Setup whole_region_1d(GridPtr grid, double V0 = 1.0, double q = 4.0) {
    Setup s = constant_1d(grid, V0, 1.0, 1.0, q, false);
    std::fill(s.discrete.in_region.begin(), s.discrete.in_region.end(), char{1});
    return s;
}

inline ScalarField random_field(GridPtr grid, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    ScalarField u(grid);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = dist(rng);
    return u;
}

/// Positive smooth random bump: sum of a few Gaussians with random centers and heights.
inline ScalarField random_bump(GridPtr grid, std::mt19937_64& rng, double center_spread, double width) {
    std::uniform_real_distribution<double> c(-center_spread, center_spread);
    std::uniform_real_distribution<double> h(0.2, 1.5);
    ScalarField u(grid);
    for (int b = 0; b < 3; ++b) {
        const double x0 = c(rng), amp = h(rng);
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double d = grid->coord(i)[0] - x0;
            u[i] += amp * std::exp(-d * d / (2.0 * width * width));
        }
    }
    return u;
}

inline double soliton(double x) { return std::sqrt(2.0) / std::cosh(x); }

}  // namespace pnls::testing
