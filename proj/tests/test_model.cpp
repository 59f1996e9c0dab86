#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support.hpp"

using namespace pnls;
using pnls::testing::line;

namespace {

ProblemSpec demo_problem(ConcentrationCase which, GridPtr grid) {
    ProblemInputs in;
    in.dim = 1;
    in.which = which;
    in.region = Region::box(1, {0.0, 0.0}, {1.0, 0.0});
    if (which == ConcentrationCase::Lambda1) {
        in.V = Coefficient::cosine(1, 1.0, 0.5, 4.0, {0.0, 0.0});
        in.Gamma = Coefficient::constant(1.0);
    } else {
        in.V = Coefficient::constant(1.0);
        in.Gamma = Coefficient::cosine(1, 1.0, -0.25, 4.0, {0.0, 0.0});
    }
    return make_problem(in, *grid);
}

const ConditionResult* find(const ConditionReport& r, const std::string& name) {
    for (const auto& c : r.results) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

}  // namespace

TEST_CASE("power nonlinearity defaults and values") {
    const auto f = Nonlinearity::power(4.0);
    CHECK(f.theta() == 4.0);
    CHECK(f.p() == 5.0);
    CHECK(f.f(2.0) == doctest::Approx(8.0));
    CHECK(f.F(1.0) == doctest::Approx(0.25));
    CHECK(f.fprime(2.0) == doctest::Approx(12.0));
    CHECK(f.f(-1.0) == 0.0);
    CHECK(f.F(-1.0) == 0.0);
    CHECK_THROWS_AS(Nonlinearity::power(2.0), std::invalid_argument);

    const auto c = Nonlinearity::combined({{1.0, 4.0}, {0.5, 6.0}});
    CHECK(c.theta() == 4.0);
    CHECK(c.p() == 7.0);
    CHECK(c.f(2.0) == doctest::Approx(8.0 + 0.5 * 32.0));
    CHECK(c.scaled(2.0).f(2.0) == doctest::Approx(2.0 * (8.0 + 16.0)));
}

TEST_CASE("nonlinearity conditions on samples") {
    CHECK(check_nonlinearity(Nonlinearity::power(4.0), 1).passed());
    CHECK(check_nonlinearity(Nonlinearity::combined({{1.0, 3.0}, {2.0, 5.0}}), 2).passed());

    // theta too large for a cubic: theta F(u) = 5u^4/4 > f(u) u.
    const auto bad = Nonlinearity::custom(
        "cubic_theta5", [](double u) { return u * u * u; }, [](double u) { return u * u * u * u / 4.0; },
        [](double u) { return 3.0 * u * u; }, 5.0, 6.0);
    const auto rep = check_nonlinearity(bad, 1);
    CHECK_FALSE(rep.passed());
    REQUIRE(find(rep, "F3") != nullptr);
    CHECK_FALSE(find(rep, "F3")->passed);
    CHECK(find(rep, "F3")->u.has_value());

    const auto wrong_order = Nonlinearity::power(4.0, 5.0, 4.5);
    CHECK_FALSE(find(check_nonlinearity(wrong_order, 1), "exponents")->passed);
}

TEST_CASE("truncation level matches sqrt(alpha/k) for the cubic") {
    const auto f = Nonlinearity::power(4.0);
    CHECK(std::abs(compute_truncation_level(f, 1.0, 4.0) - 0.5) <= 1e-10);
    CHECK(std::abs(compute_truncation_level(f, 4.0, 4.0) - 1.0) <= 1e-10);
    for (double alpha : {0.3, 1.7, 12.0}) {
        for (double k : {2.5, 4.0, 9.0}) {
            const double a = compute_truncation_level(f, alpha, k);
            CHECK(std::abs(a - std::sqrt(alpha / k)) <= 1e-10 * std::sqrt(alpha / k));
            CHECK(std::abs(f.f(a) / a - alpha / k) <= 1e-12 * (alpha / k));
        }
    }
}

TEST_CASE("truncation level is invariant under f -> cf, alpha -> c alpha") {
    const auto f = Nonlinearity::combined({{1.0, 4.0}, {0.3, 5.0}});
    const double a1 = compute_truncation_level(f, 1.3, 4.0);
    const double a2 = compute_truncation_level(f.scaled(2.0), 2.6, 4.0);
    CHECK(std::abs(a1 - a2) <= 1e-12 * a1);
}

TEST_CASE("truncation level fails when f(u)/u stays below alpha/k") {
    const double alpha = 1.0, k = 4.0, cap = alpha / (2.0 * k);
    // f(u)/u = cap * u / (1 + u) < cap
    const auto bounded = Nonlinearity::custom(
        "bounded", [=](double u) { return cap * u * u / (1.0 + u); },
        [=](double u) { return cap * (u * u / 2.0 - u + std::log1p(u)); },
        [=](double u) { return cap * (u * u + 2.0 * u) / ((1.0 + u) * (1.0 + u)); }, 3.0, 4.0);
    CHECK_THROWS_AS(compute_truncation_level(bounded, alpha, k), std::runtime_error);
}

TEST_CASE("penalized nonlinearity construction guards") {
    const auto f = Nonlinearity::power(4.0);
    CHECK(PenalizedNonlinearity::default_k(4.0) == 4.0);
    CHECK_THROWS_AS(PenalizedNonlinearity(f, 1.0, 2.0), std::invalid_argument);  // needs k > 2
    CHECK_THROWS_AS(PenalizedNonlinearity(f, 0.0, 4.0), std::invalid_argument);
    CHECK_NOTHROW(PenalizedNonlinearity(f, 1.0, 2.01));
}

TEST_CASE("g and G evaluation") {
    const PenalizedNonlinearity pen(Nonlinearity::power(4.0), 1.0, 4.0);
    CHECK(pen.a() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pen.g(1.0, false, 0.0) == 0.0);
    CHECK(pen.g(1.0, true, -2.0) == 0.0);
    CHECK(pen.g(1.0, false, 2.0) == doctest::Approx(0.5));
    CHECK(pen.g(1.0, true, 2.0) == doctest::Approx(8.0));
    CHECK(pen.G(1.0, false, 0.0) == 0.0);
    CHECK(pen.G(1.0, true, 1.0) == doctest::Approx(0.25));

    // below a both branches coincide bit for bit
    for (double u = 1e-6; u <= pen.a(); u *= 1.7) {
        for (double gamma : {0.5, 0.8, 1.0}) {
            CHECK(pen.g(gamma, true, u) == pen.g(gamma, false, u));
            CHECK(pen.g(gamma, false, u) == gamma * pen.base().f(u));
        }
    }
    // above a, outside: g/u is the constant Gamma alpha/k
    for (double u = pen.a(); u < 1e4; u *= 1.9) {
        CHECK(std::abs(pen.g(0.7, false, u) / u - 0.7 * pen.slope()) <= 1e-15 * 0.7 * pen.slope());
    }
    // f tilde continuous at a
    CHECK(std::abs(pen.f_tilde(pen.a() * (1 + 1e-12)) - pen.f_tilde(pen.a())) <= 1e-10);
}

TEST_CASE("G is an antiderivative of g outside the region") {
    const PenalizedNonlinearity pen(Nonlinearity::power(4.0), 1.0, 4.0);
    const double eps = 1e-6;
    for (double u : {0.1, 0.3, 0.49, 0.51, 0.8, 2.0, 10.0}) {
        for (bool inside : {false, true}) {
            const double fd = (pen.G(0.9, inside, u + eps) - pen.G(0.9, inside, u - eps)) / (2 * eps);
            const double g = pen.g(0.9, inside, u);
            CHECK(std::abs(fd - g) <= 1e-8 * std::max(1.0, std::abs(g)));
        }
    }
}

TEST_CASE("gamma normalization rescales f by the old sup") {
    const auto grid = line(-5, 5, 101);
    ProblemInputs in;
    in.V = Coefficient::constant(2.0);
    in.Gamma = Coefficient::constant(3.0);
    in.region = Region::box(1, {0.0, 0.0}, {1.0, 0.0});
    const auto p = make_problem(in, *grid);
    CHECK(p.gamma_scale == doctest::Approx(3.0));
    CHECK(p.Gamma({0.2, 0.0}) == doctest::Approx(1.0));
    CHECK(p.nonlinearity.f(1.0) == doctest::Approx(3.0));
    CHECK(p.alpha == doctest::Approx(2.0));
    CHECK(p.beta == doctest::Approx(1.0));

    in.anchor = {3.0, 0.0};
    CHECK_THROWS_AS(make_problem(in, *grid), std::invalid_argument);
}

TEST_CASE("demo problems satisfy the structural conditions") {
    const auto grid = line(-8, 8, 2048);
    for (auto which : {ConcentrationCase::Lambda1, ConcentrationCase::Lambda2}) {
        const auto p = demo_problem(which, grid);
        const auto rep = check_problem(p, *grid, grid->max_spacing());
        INFO(to_string(which));
        for (const auto& r : rep.results) {
            INFO(r.name << ": " << r.detail);
            CHECK(r.passed);
        }
    }
}

TEST_CASE("structural violations are reported by name") {
    const auto grid = line(-8, 8, 801);
    SUBCASE("V dipping to zero") {
        ProblemInputs in;
        in.V = Coefficient::cosine(1, 0.0, 0.5, 4.0, {0.0, 0.0});  // V(0) = 0
        in.Gamma = Coefficient::constant(1.0);
        in.region = Region::box(1, {0.0, 0.0}, {1.0, 0.0});
        in.alpha = 0.25;
        const auto rep = check_problem(make_problem(in, *grid), *grid, grid->max_spacing());
        REQUIRE(rep.first_failure() != nullptr);
        CHECK(rep.first_failure()->name == "V");
        CHECK(rep.first_failure()->x.has_value());
    }
    SUBCASE("Gamma above one without normalization") {
        ProblemInputs in;
        in.V = Coefficient::constant(1.0);
        in.Gamma = Coefficient::cosine(1, 1.0, 0.25, 4.0, {0.0, 0.0});  // up to 2
        in.normalize_gamma = false;
        in.region = Region::box(1, {0.0, 0.0}, {1.0, 0.0});
        const auto rep = check_problem(make_problem(in, *grid), *grid, grid->max_spacing());
        REQUIRE(find(rep, "Gamma") != nullptr);
        CHECK_FALSE(find(rep, "Gamma")->passed);
    }
    SUBCASE("potential well outside the region") {
        ProblemInputs in;
        in.V = Coefficient::cosine(1, 1.0, 0.5, 8.0, {3.0, 0.0});
        in.Gamma = Coefficient::constant(1.0);
        in.region = Region::box(1, {0.0, 0.0}, {1.0, 0.0});
        const auto rep = check_problem(make_problem(in, *grid), *grid, grid->max_spacing());
        REQUIRE(find(rep, "Lambda1") != nullptr);
        CHECK_FALSE(find(rep, "Lambda1")->passed);
    }
}

TEST_CASE("G properties hold for the penalization of the demo problems") {
    const auto grid = line(-8, 8, 2048);
    for (auto which : {ConcentrationCase::Lambda1, ConcentrationCase::Lambda2}) {
        const auto p = demo_problem(which, grid);
        const PenalizedNonlinearity pen(p.nonlinearity, p.alpha, PenalizedNonlinearity::default_k(4.0));
        const auto rep = check_G_properties(pen, p, *grid);
        for (const auto& r : rep.results) {
            INFO(r.name << ": " << r.detail);
            CHECK(r.passed);
        }
        CHECK(rep.results.size() == 4);
    }
}

TEST_CASE("without truncation the outside bound of G3 fails at large u") {
    const auto grid = line(-8, 8, 401);
    const auto p = demo_problem(ConcentrationCase::Lambda1, grid);
    const auto untruncated = PenalizedNonlinearity::unpenalized(p.nonlinearity, p.alpha, 4.0);
    const auto rep = check_G_properties(untruncated, p, *grid);
    const auto* g3 = find(rep, "G3");
    REQUIRE(g3 != nullptr);
    CHECK_FALSE(g3->passed);
    REQUIRE(g3->u.has_value());
    CHECK(*g3->u > untruncated.a());
    // direct evaluation at u = 10a outside the region
    const double u = 10.0 * untruncated.a();
    const double x_out = 5.0;
    CHECK(untruncated.g(1.0, false, u) * u > p.V({x_out, 0.0}) * u * u / untruncated.k());
}
