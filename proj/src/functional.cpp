#include "pnls/functional.hpp"

#include <cmath>
#include <stdexcept>

namespace pnls {

DiscreteProblem DiscreteProblem::sample(const ProblemSpec& problem, GridPtr grid, double band_width) {
    DiscreteProblem d;
    d.grid = grid;
    d.V.resize(grid->size());
    d.Gamma.resize(grid->size());
    for (std::size_t n = 0; n < grid->size(); ++n) {
        const Coord x = grid->coord(n);
        d.V[n] = problem.V(x);
        d.Gamma[n] = problem.Gamma(x);
    }
    d.in_region = region_mask(*grid, problem.region);
    d.band = boundary_band(*grid, problem.region, band_width);
    d.anchor = problem.anchor;
    return d;
}

// Non-owning: problem and pen must outlive the Functional.
Functional::Functional(const DiscreteProblem& problem, const PenalizedNonlinearity& pen, double hbar)
    : problem_(&problem), pen_(&pen), hbar_(hbar) {
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw std::invalid_argument("hbar must be positive");
}

EnergyBreakdown Functional::energy(const ScalarField& u) const {
    const auto& P = *problem_;
    const ScalarField lap = laplacian_apply(u);
    const double dv = u.grid().cell_volume();
    double dirichlet = 0.0;
    double pot = 0.0;
    double nl = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) {
        dirichlet -= u[n] * lap[n];
        pot += P.V[n] * u[n] * u[n];
        nl += pen_->G(P.Gamma[n], P.in_region[n] != 0, u[n]);
    }
    EnergyBreakdown e;
    e.kinetic = 0.5 * hbar_ * hbar_ * dirichlet * dv;
    e.potential = 0.5 * pot * dv;
    e.nonlinear = nl * dv;
    e.total = e.kinetic + e.potential - e.nonlinear;
    e.Q = 2.0 * (e.kinetic + e.potential);
    return e;
}

double Functional::quadratic_form(const ScalarField& u) const {
    const EnergyBreakdown e = energy(u);
    return e.Q;
}

double Functional::nonlinear_pairing(const ScalarField& u) const {
    const auto& P = *problem_;
    double s = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) s += pen_->g(P.Gamma[n], P.in_region[n] != 0, u[n]) * u[n];
    return s * u.grid().cell_volume();
}

void apply_linear(double hbar, const DiscreteProblem& problem, const ScalarField& u, ScalarField& out) {
    laplacian_apply(u, out);
    const double h2 = hbar * hbar;
    const auto& V = problem.V;
    for (std::size_t n = 0; n < u.size(); ++n) out[n] = -h2 * out[n] + V[n] * u[n];
}

void Functional::apply_linear(const ScalarField& u, ScalarField& out) const {
    pnls::apply_linear(hbar_, *problem_, u, out);
}

ScalarField Functional::residual(const ScalarField& u) const {
    ScalarField r(u.grid_ptr());
    apply_linear(u, r);
    const auto& P = *problem_;
    for (std::size_t n = 0; n < u.size(); ++n) r[n] -= pen_->g(P.Gamma[n], P.in_region[n] != 0, u[n]);
    return r;
}

double Functional::nehari_scale(const ScalarField& u, double rel_tol, double t_max) const {
    const double Q = quadratic_form(u);
    if (!(Q > 0.0)) throw std::invalid_argument("nehari_scale needs a nonzero field");
    const auto& P = *problem_;
    const double dv = u.grid().cell_volume();
    // psi(t) = Q - (1/t) int g(x, t u) u; nonincreasing in t because g/u is nondecreasing.
    auto psi = [&](double t) {
        double s = 0.0;
        for (std::size_t n = 0; n < u.size(); ++n) {
            if (u[n] > 0.0) s += pen_->g(P.Gamma[n], P.in_region[n] != 0, t * u[n]) * u[n];
        }
        return Q - s * dv / t;
    };

    double lo = 1.0;
    double hi = 1.0;
    if (psi(1.0) > 0.0) {
        while (psi(hi) > 0.0) {
            lo = hi;
            hi *= 2.0;
            if (hi > t_max) {
                throw NehariError("ray has no interior maximum: Phi(t u) increases up to t = " +
                                  std::to_string(t_max));
            }
        }
    } else {
        while (!(psi(lo) > 0.0)) {
            hi = lo;
            lo *= 0.5;
            if (lo < 1e-300) throw NehariError("ray maximum not bracketed from below");
        }
    }
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (psi(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace pnls
