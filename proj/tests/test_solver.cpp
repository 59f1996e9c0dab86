#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace pnls;
using namespace pnls::testing;

namespace {

// Dense Gaussian elimination with partial pivoting.
std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        }
        std::swap(A[c], A[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double m = A[r][c] / A[c][c];
            if (m == 0.0) continue;
            for (std::size_t k = c; k < n; ++k) A[r][k] -= m * A[c][k];
            b[r] -= m * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
        x[i] = s / A[i][i];
    }
    return x;
}

// Matrix of (-hbar^2 Lap_h + V) assembled entry by entry from the stencil.
std::vector<std::vector<double>> dense_operator(const Grid& g, double hbar, const std::vector<double>& V) {
    const std::size_t n = g.size();
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    for (std::size_t p = 0; p < n; ++p) {
        const auto idx = g.multi_index(p);
        A[p][p] = V[p];
        for (int a = 0; a < g.dim(); ++a) {
            const double w = hbar * hbar / (g.spacing(a) * g.spacing(a));
            A[p][p] += 2.0 * w;
            for (int s : {-1, 1}) {
                auto q = idx;
                if (s < 0 && q[a] == 0) continue;
                if (s > 0 && q[a] + 1 == g.nodes(a)) continue;
                q[a] = s < 0 ? q[a] - 1 : q[a] + 1;
                A[p][g.flat(q[0], q[1])] -= w;
            }
        }
    }
    return A;
}

SolveResult solve_soliton(double hbar, SolverParams params = {}) {
    static const auto s = whole_region_1d(line(-20, 20, 4096));
    return solve(s.discrete, *s.pen, hbar, params);
}

}  // namespace

TEST_CASE("initial guess is a unit Gaussian at the anchor") {
    const auto g = line(-5, 5, 199);
    const auto u = initial_guess({0.0, 0.0}, 1.0, g);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = g->coord(i)[0];
        CHECK(u[i] == doctest::Approx(std::exp(-x * x / 2.0)));
    }
    const auto half = initial_guess({0.0, 0.0}, 0.5, g);
    const auto full = initial_guess({0.0, 0.0}, 1.0, g);
    // u_{hbar/2}(x) = u_hbar(2x)
    CHECK(half[g->size() / 2 + 10] == doctest::Approx(full[g->size() / 2 + 20]).epsilon(1e-12));
}

TEST_CASE("initial guess puts more mass inside the region") {
    const auto g = line(-6, 6, 601);
    const auto region = Region::box(1, {0.0, 0.0}, {1.0, 0.0});
    const auto mask = region_mask(*g, region);
    for (double hbar : {1.0, 0.5, 0.25, 0.1}) {
        const auto u = initial_guess({0.0, 0.0}, hbar, g);
        double in = 0, out = 0;
        for (std::size_t i = 0; i < u.size(); ++i) (mask[i] ? in : out) += u[i];
        CHECK(in > out);
    }
}

TEST_CASE("conjugate gradients reproduce known solutions") {
    std::mt19937_64 rng(1);
    for (auto pre : {Preconditioner::Tridiagonal, Preconditioner::Jacobi}) {
        const auto s = constant_1d(line(-3, 3, 300), 1.7);
        SolverParams p;
        p.preconditioner = pre;
        const auto y = random_field(s.grid, rng);
        ScalarField rhs(s.grid);
        apply_linear(0.2, s.discrete, y, rhs);
        const auto z = cg_solve(0.2, s.discrete, rhs, p);
        ScalarField back(s.grid);
        apply_linear(0.2, s.discrete, z, back);
        CHECK(norm_l2(back - rhs) <= p.cg_tol * norm_l2(rhs));
        CHECK(norm_l2(z - y) <= 1e-7 * norm_l2(y));
        CHECK(cg_solve(0.2, s.discrete, ScalarField(s.grid), p).max_abs() == 0.0);
    }
}

TEST_CASE("conjugate gradients agree with a dense solve in 1D") {
    const auto s = constant_1d(line(-5, 5, 500), 1.0);
    const double L = 10.0;
    const auto rhs =
        ScalarField::sample(s.grid, [&](const Coord& x) { return std::sin(std::numbers::pi * (x[0] + 5.0) / L); });
    SolverParams p;
    const auto z = cg_solve(1.0, s.discrete, rhs, p);
    const auto dense = dense_solve(dense_operator(*s.grid, 1.0, s.discrete.V),
                                   std::vector<double>(rhs.values().begin(), rhs.values().end()));
    double err = 0, scale = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        err = std::max(err, std::abs(z[i] - dense[i]));
        scale = std::max(scale, std::abs(dense[i]));
    }
    CHECK(err <= 1e-8 * scale);
}

TEST_CASE("conjugate gradients agree with a dense solve in 2D") {
    const auto g = make_grid({-2, -2}, {2, 2}, {15, 15});
    ProblemInputs in;
    in.dim = 2;
    in.V = Coefficient::gaussian_well(2, 2.0, 1.0, 0.7, {0.0, 0.0});
    in.Gamma = Coefficient::constant(1.0);
    in.region = Region::ball(2, {0.0, 0.0}, 1.0);
    const auto problem = make_problem(in, *g);
    const auto d = DiscreteProblem::sample(problem, g, g->max_spacing());
    std::mt19937_64 rng(4);
    const auto rhs = random_field(g, rng);
    const auto z = cg_solve(0.6, d, rhs, SolverParams{});
    const auto dense = dense_solve(dense_operator(*g, 0.6, d.V), std::vector<double>(rhs.values().begin(), rhs.values().end()));
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(z[i] - dense[i]) <= 1e-8);

    SolverParams starved;
    starved.cg_max = 1;
    starved.preconditioner = Preconditioner::Jacobi;
    try {
        (void)cg_solve(0.6, d, rhs, starved);
        FAIL("expected CgError");
    } catch (const CgError& e) {
        CHECK(e.achieved() > starved.cg_tol);
    }
    SolverParams tri;
    tri.preconditioner = Preconditioner::Tridiagonal;
    CHECK_THROWS_AS(cg_solve(0.6, d, rhs, tri), std::invalid_argument);
}

TEST_CASE("solver parameters are validated") {
    SolverParams p;
    CHECK_NOTHROW(p.validate());
    p.step = 1.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.tol_residual = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.max_outer = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("ground state of the cubic problem is the sech soliton") {
    const auto r = solve_soliton(1.0);
    REQUIRE(r.converged);
    CHECK(std::abs(r.level - 4.0 / 3.0) <= 0.005 * 4.0 / 3.0);
    const Grid& g = r.u.grid();
    // center of mass locates the peak between nodes
    double mass = 0, moment = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        mass += r.u[i];
        moment += r.u[i] * g.coord(i)[0];
    }
    const double center = moment / mass;
    CHECK(std::abs(center - r.argmax_point[0]) <= g.spacing(0));
    double err = 0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(r.u[i] - soliton(g.coord(i)[0] - center)));
    CHECK(err <= 1e-3);
    CHECK(r.u.min() >= 0.0);
    CHECK(r.residual_norm <= SolverParams{}.tol_residual);
    CHECK(std::abs(r.nehari_t - 1.0) <= 1e-6);
    CHECK(r.edge_ratio < 1e-8);
}

TEST_CASE("level scales like hbar in one dimension") {
    const auto r1 = solve_soliton(1.0);
    const auto r2 = solve_soliton(0.5);
    REQUIRE(r2.converged);
    CHECK(std::abs(r2.level - 0.5 * 4.0 / 3.0) <= 0.005 * 0.5 * 4.0 / 3.0);
    CHECK(std::abs(r2.level / 0.5 - r1.level) <= 0.005 * r1.level);
}

TEST_CASE("symmetric data give a symmetric solution") {
    const auto g = line(-8, 8, 1001);
    ProblemInputs in;
    in.V = Coefficient::cosine(1, 1.0, 0.5, 4.0, {0.0, 0.0});
    in.Gamma = Coefficient::constant(1.0);
    in.region = Region::box(1, {0.0, 0.0}, {1.0, 0.0});
    const auto problem = make_problem(in, *g);
    const auto d = DiscreteProblem::sample(problem, g, g->max_spacing());
    const PenalizedNonlinearity pen(problem.nonlinearity, problem.alpha, 4.0);
    const auto r = solve(d, pen, 0.2, SolverParams{});
    REQUIRE(r.converged);
    double asym = 0;
    for (std::size_t i = 0; i < g->size(); ++i) asym = std::max(asym, std::abs(r.u[i] - r.u[g->size() - 1 - i]));
    CHECK(asym <= 1e-6 * r.u.max_abs());
}

TEST_CASE("descent is monotone, positive and lands on the Nehari set") {
    const auto s = constant_1d(line(-8, 8, 1200), 1.0, 1.0, 1.0);
    for (double hbar : {0.5, 0.15}) {
        std::vector<IterationInfo> trace;
        const auto r = solve(s.discrete, *s.pen, hbar, SolverParams{}, std::nullopt,
                             [&](const IterationInfo& it) { trace.push_back(it); });
        REQUIRE(r.converged);
        REQUIRE(trace.size() >= 2);
        for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i].energy <= trace[i - 1].energy + 1e-12);
        for (const auto& it : trace) CHECK(it.min_value >= 0.0);

        const Functional phi(s.discrete, *s.pen, hbar);
        const double Q = phi.quadratic_form(r.u);
        CHECK(std::abs(Q - phi.nonlinear_pairing(r.u)) <= 1e-6 * Q);
        const double theta = 4.0, k = s.pen->k();
        CHECK((0.5 - 1.0 / theta - 1.0 / (2.0 * k)) * Q <= r.level);
        CHECK(r.level > 0.0);
        CHECK(std::abs(phi.nehari_scale(r.u) - 1.0) <= 1e-6);
    }
}

TEST_CASE("iteration cap returns the best iterate unconverged") {
    SolverParams p;
    p.max_outer = 2;
    const auto r = solve_soliton(1.0, p);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 2);
    CHECK(r.level > 0.0);
}

TEST_CASE("multi-start keeps the lowest converged level") {
    const auto s = constant_1d(line(-8, 8, 800), 1.0, 1.0, 1.0);
    SolverParams p;
    p.starts = 3;
    p.seed = 42;
    const auto multi = solve(s.discrete, *s.pen, 0.3, p);
    const auto single = solve(s.discrete, *s.pen, 0.3, SolverParams{});
    REQUIRE(multi.converged);
    CHECK(multi.level <= single.level + 1e-12);
    const auto again = solve(s.discrete, *s.pen, 0.3, p);
    CHECK(again.level == multi.level);
}

TEST_CASE("argmax ties break toward the lowest index") {
    const auto s = constant_1d(line(-4, 4, 80), 1.0, 1.0, 1.0);
    SolveResult r;
    r.u = ScalarField(s.grid, 0.0);
    r.u[30] = 1.0;
    r.u[50] = 1.0;
    const Functional phi(s.discrete, *s.pen, 1.0);
    fill_diagnostics(r, phi);
    CHECK(r.argmax_index == 30);
}
