#include "pnls/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace pnls {

void SolverParams::validate() const {
    if (!(tol_residual > 0.0)) throw std::invalid_argument("tol_residual must be positive");
    if (max_outer < 1) throw std::invalid_argument("max_outer must be at least 1");
    if (!(step > 0.0 && step <= 1.0)) throw std::invalid_argument("step must lie in (0, 1]");
    if (!(cg_tol > 0.0)) throw std::invalid_argument("cg_tol must be positive");
    if (cg_max < 1) throw std::invalid_argument("cg_max must be at least 1");
    if (starts < 1) throw std::invalid_argument("starts must be at least 1");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("backtrack must lie in (0, 1)");
    if (!(step_growth >= 1.0)) throw std::invalid_argument("step_growth must be at least 1");
    if (!(width_factor > 0.0)) throw std::invalid_argument("width_factor must be positive");
    if (!(max_stretch >= 1.0)) throw std::invalid_argument("max_stretch must be at least 1");
}

ScalarField initial_guess(const Coord& anchor, double hbar, GridPtr grid, double width_factor) {
    const double w = width_factor * hbar;
    const int dim = grid->dim();
    return ScalarField::sample(grid, [&](const Coord& x) {
        double r2 = 0.0;
        for (int a = 0; a < dim; ++a) r2 += (x[a] - anchor[a]) * (x[a] - anchor[a]);
        return std::exp(-r2 / (2.0 * w * w));
    });
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Applies M^{-1} for the chosen preconditioner of A = -hbar^2 Lap_h + V.
class LinearPreconditioner {
public:
    LinearPreconditioner(double hbar, const DiscreteProblem& problem, Preconditioner kind) {
        const Grid& g = *problem.grid;
        if (kind == Preconditioner::Auto) kind = g.dim() == 1 ? Preconditioner::Tridiagonal : Preconditioner::Jacobi;
        if (kind == Preconditioner::Tridiagonal && g.dim() != 1) {
            throw std::invalid_argument("tridiagonal preconditioner is only available in 1D");
        }
        kind_ = kind;
        const double h2 = hbar * hbar;
        double offdiag_sum = 0.0;
        for (int a = 0; a < g.dim(); ++a) offdiag_sum += 2.0 * h2 / (g.spacing(a) * g.spacing(a));
        diag_.resize(g.size());
        for (std::size_t n = 0; n < g.size(); ++n) diag_[n] = offdiag_sum + problem.V[n];
        if (kind_ == Preconditioner::Tridiagonal) {
            // Thomas factorization of the symmetric tridiagonal A.
            off_ = -h2 / (g.spacing(0) * g.spacing(0));
            const std::size_t n = g.size();
            cprime_.resize(n);
            denom_.resize(n);
            denom_[0] = diag_[0];
            cprime_[0] = off_ / denom_[0];
            for (std::size_t i = 1; i < n; ++i) {
                denom_[i] = diag_[i] - off_ * cprime_[i - 1];
                cprime_[i] = off_ / denom_[i];
            }
        }
    }

    void apply(std::span<const double> r, std::span<double> z) const {
        if (kind_ == Preconditioner::Jacobi) {
            for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / diag_[i];
            return;
        }
        const std::size_t n = r.size();
        z[0] = r[0] / denom_[0];
        for (std::size_t i = 1; i < n; ++i) z[i] = (r[i] - off_ * z[i - 1]) / denom_[i];
        for (std::size_t i = n - 1; i-- > 0;) z[i] -= cprime_[i] * z[i + 1];
    }

private:
    Preconditioner kind_ = Preconditioner::Jacobi;
    std::vector<double> diag_;
    double off_ = 0.0;
    std::vector<double> cprime_, denom_;
};

ScalarField cg_solve_with(double hbar, const DiscreteProblem& problem, const LinearPreconditioner& M,
                          const ScalarField& rhs, const SolverParams& params) {
    rhs.require_finite("cg_solve");
    ScalarField x(rhs.grid_ptr());
    const double bnorm = std::sqrt(dot(rhs.values(), rhs.values()));
    if (bnorm == 0.0) return x;

    ScalarField r = rhs;
    ScalarField z(rhs.grid_ptr());
    ScalarField p(rhs.grid_ptr());
    ScalarField Ap(rhs.grid_ptr());
    M.apply(r.values(), z.values());
    p = z;
    double rz = dot(r.values(), z.values());
    double rnorm = bnorm;
    for (int it = 0; it < params.cg_max; ++it) {
        apply_linear(hbar, problem, p, Ap);
        const double alpha = rz / dot(p.values(), Ap.values());
        x.axpy(alpha, p);
        r.axpy(-alpha, Ap);
        rnorm = std::sqrt(dot(r.values(), r.values()));
        if (rnorm <= params.cg_tol * bnorm) return x;
        M.apply(r.values(), z.values());
        const double rz_next = dot(r.values(), z.values());
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    }
    throw CgError("conjugate gradients did not converge: relative residual " + std::to_string(rnorm / bnorm),
                  rnorm / bnorm);
}

SolveResult descend(const Functional& phi, const LinearPreconditioner& M, ScalarField u,
                    const SolverParams& params, const IterationObserver& observer) {
    u = positive_part(u);
    if (!(u.max() > 0.0)) throw SolverError("initial guess vanishes after projection onto u >= 0");
    u *= phi.nehari_scale(u);

    double energy = phi.value(u);
    ScalarField r = phi.residual(u);
    double res = norm_l2(r) / norm_l2(u);
    double step = params.step;
    int it = 0;
    bool converged = res <= params.tol_residual;
    bool stalled = false;
    if (observer) observer({0, energy, res, step, u.min()});

    // Polak-Ribiere memory in the Q_hbar metric; cleared after any backtrack.
    ScalarField d_prev, p_prev;
    double rd_prev = 0.0;
    bool restart = true;

    while (!converged && it < params.max_outer && !stalled) {
        ++it;
        const ScalarField d = cg_solve_with(phi.hbar(), phi.problem(), M, r, params);
        const double rd = inner_product(r, d);
        ScalarField p = d;
        bool momentum = false;
        if (params.conjugate && !restart && rd_prev > 0.0) {
            const double beta = std::max(0.0, (rd - inner_product(r, d_prev)) / rd_prev);
            if (beta > 0.0) {
                p.axpy(beta, p_prev);
                momentum = inner_product(r, p) > 0.0;
                if (!momentum) p = d;
            }
        }

        ScalarField trial;
        double trial_energy = 0.0;
        const double step0 = step;
        for (;;) {
            trial = u;
            trial.axpy(-step, p);
            trial = positive_part(trial);
            bool ok = trial.max() > 0.0;
            if (ok) {
                try {
                    trial *= phi.nehari_scale(trial);
                    trial_energy = phi.value(trial);
                    ok = trial_energy <= energy + 1e-12;
                } catch (const NehariError&) {
                    ok = false;
                }
            }
            if (ok) break;
            step *= params.backtrack;
            if (step < params.min_step) {
                if (momentum) {
                    // retry along the plain preconditioned gradient
                    p = d;
                    momentum = false;
                    step = step0;
                    continue;
                }
                stalled = true;
                break;
            }
        }
        if (stalled) break;
        restart = step < step0;
        ScalarField r_trial = phi.residual(trial);
        if (params.conjugate && !restart) {
            // secant on the directional derivative; stretches steps along slow modes
            const double g0 = inner_product(r, p), g1 = inner_product(r_trial, p);
            if (g0 > 0.0 && g1 > 0.0 && g1 < g0) {
                const double s = std::min(step * g0 / (g0 - g1), params.max_stretch * step);
                ScalarField longer = u;
                longer.axpy(-s, p);
                longer = positive_part(longer);
                if (longer.max() > 0.0) {
                    try {
                        longer *= phi.nehari_scale(longer);
                        const double e = phi.value(longer);
                        if (e <= energy + 1e-12) {
                            trial = std::move(longer);
                            trial_energy = e;
                            r_trial = phi.residual(trial);
                        }
                    } catch (const NehariError&) {
                    }
                }
            }
        }
        u = std::move(trial);
        energy = trial_energy;
        r = std::move(r_trial);
        res = norm_l2(r) / norm_l2(u);
        converged = res <= params.tol_residual;
        if (observer) observer({it, energy, res, step, u.min()});
        step = std::min(1.0, step * params.step_growth);
        d_prev = d;
        p_prev = std::move(p);
        rd_prev = rd;
    }

    SolveResult out;
    out.u = std::move(u);
    out.iterations = it;
    out.converged = converged;
    fill_diagnostics(out, phi);
    return out;
}

}  // namespace

ScalarField cg_solve(double hbar, const DiscreteProblem& problem, const ScalarField& rhs,
                     const SolverParams& params) {
    if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
    const LinearPreconditioner M(hbar, problem, params.preconditioner);
    return cg_solve_with(hbar, problem, M, rhs, params);
}

double relative_residual(const Functional& phi, const ScalarField& u) {
    return norm_l2(phi.residual(u)) / norm_l2(u);
}

void fill_diagnostics(SolveResult& result, const Functional& phi) {
    const DiscreteProblem& P = phi.problem();
    const ScalarField& u = result.u;
    result.breakdown = phi.energy(u);
    result.level = result.breakdown.total;
    result.residual_norm = relative_residual(phi, u);
    result.nehari_t = phi.nehari_scale(u);

    result.m = 0.0;
    for (std::size_t n : P.band) result.m = std::max(result.m, u[n]);

    // Lowest flat index wins ties.
    std::size_t best = 0;
    for (std::size_t n = 1; n < u.size(); ++n) {
        if (u[n] > u[best]) best = n;
    }
    result.argmax_index = best;
    result.argmax_point = u.grid().coord(best);
    result.argmax_value = u[best];
    result.V_at_argmax = P.V[best];
    result.Gamma_at_argmax = P.Gamma[best];

    double edge = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) {
        if (u.grid().is_edge_node(n)) edge = std::max(edge, std::abs(u[n]));
    }
    result.edge_ratio = result.argmax_value > 0.0 ? edge / result.argmax_value : 0.0;
}

SolveResult solve(const DiscreteProblem& problem, const PenalizedNonlinearity& pen, double hbar,
                  const SolverParams& params, std::optional<ScalarField> start,
                  const IterationObserver& observer) {
    params.validate();
    const Functional phi(problem, pen, hbar);
    const LinearPreconditioner M(hbar, problem, params.preconditioner);
    ScalarField base = start ? std::move(*start) : initial_guess(problem.anchor, hbar, problem.grid, params.width_factor);
    if (!base.compatible(ScalarField(problem.grid))) throw std::invalid_argument("start field is on another grid");
    base.require_finite("solve");

    std::optional<SolveResult> best;
    std::string last_error;
    for (int s = 0; s < params.starts; ++s) {
        ScalarField guess = base;
        if (s > 0) {
            std::mt19937_64 rng(params.seed + static_cast<std::uint64_t>(s));
            std::uniform_real_distribution<double> noise(-0.5, 0.5);
            for (double& v : guess.values()) v *= 1.0 + noise(rng);
        }
        SolveResult attempt;
        try {
            attempt = descend(phi, M, std::move(guess), params, observer);
        } catch (const NehariError& e) {
            last_error = e.what();
            continue;
        }
        const bool better = !best || (attempt.converged && !best->converged) ||
                            (attempt.converged == best->converged && attempt.level < best->level);
        if (better) best = std::move(attempt);
    }
    if (!best) throw SolverError("every start failed: " + last_error);
    return std::move(*best);
}

}  // namespace pnls
