#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fixtures.hpp"
#include "tipping/error.hpp"
#include "tipping/model.hpp"

using namespace tipping;

TEST_CASE("abm roots match the characteristic quadratic") {
    const auto r = abm_roots(0.5, 1.0, 0.1);
    const auto q = fx::quadratic_roots(0.5, 1.0, 0.1);
    CHECK(r.plus == doctest::Approx(q.plus).epsilon(1e-14));
    CHECK(r.minus == doctest::Approx(q.minus).epsilon(1e-14));
    for (double b : {r.plus, r.minus}) CHECK(std::abs(0.5 * b * b + 0.5 * b - 0.1) < 1e-14);
}

TEST_CASE("abm fundamentals solve (L - r)u = 0") {
    const auto fp = make_abm_fundamentals(0.5, 1.0, 0.1);
    const auto d = make_abm_diffusion(0.5, 1.0, 0.1);
    for (double x : {0.0, 0.7, 3.0}) {
        CHECK(std::abs(d.generator(fp.psi(x), fp.psi_p(x), fp.psi_pp(x), x)) < 1e-12 * fp.psi(x));
        CHECK(std::abs(d.generator(fp.phi(x), fp.phi_p(x), fp.phi_pp(x), x)) < 1e-12 * fp.phi(x));
        CHECK(fp.D(x) > 0.0);
    }
}

TEST_CASE("uniform law") {
    const auto t = make_uniform_tipping(2.0);
    CHECK(t.F(0.5) == doctest::Approx(0.25));
    CHECK(t.F(3.0) == 1.0);
    CHECK(t.f(2.5) == 0.0);
    CHECK(t.H(1.0) == doctest::Approx(1.0));
    CHECK(t.inverse_cdf(0.3) == doctest::Approx(0.6));
}

TEST_CASE("twocases law has unit mass and a constant hazard tail") {
    const double xbar = 8.0, c = 0.05, eps = 0.01;
    const auto t = make_twocases_tipping(c, eps, xbar);
    double mass = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = xbar * (i + 0.5) / n;
        mass += t.f(x) * xbar / n;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(t.F(xbar) == doctest::Approx(1.0).epsilon(1e-12));
    for (double m : {1.0, 3.0, 7.0}) CHECK(t.H(m) == doctest::Approx(eps / (1.0 - eps * (xbar - m))).epsilon(1e-10));
    CHECK_THROWS_AS(make_twocases_tipping(0.01, 0.05, xbar), ParameterError);
}

TEST_CASE("table law interpolates and loads from csv") {
    const char* path = "test_model_table.csv";
    {
        std::ofstream out(path);
        out << "x,f\n0,0.9\n0.5,0.9\n1,0.5\n1.5,0.1\n2,0.1\n";
    }
    const auto t = load_tipping_table(path);
    std::remove(path);
    CHECK(t.ybar == 2.0);
    CHECK(t.f(0.75) == doctest::Approx(0.7));
    CHECK(t.F(2.0) == doctest::Approx(1.0));
    CHECK(t.F(1.0) == doctest::Approx(0.45 + 0.35));
    CHECK_THROWS_AS(make_table_tipping({0.1, 1.0}, {1.0, 1.0}), ParameterError);
    CHECK_THROWS_AS(load_tipping_table("does-not-exist.csv"), ParameterError);
}

TEST_CASE("downgraded abm value: continuity at u*, slope one above it") {
    const auto U = make_downgraded_abm(0.3, 1.0, 0.1, 0.0);
    const double u = U.u_star;
    CHECK(u > 0.0);
    CHECK(U.U(0.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(U.U_prime(u + 1.0) == doctest::Approx(1.0));
    CHECK(U.U(u + 1e-9) - U.U(u - 1e-9) == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(U.U_prime(u - 1e-9) == doctest::Approx(1.0).epsilon(1e-6));
    // above the threshold U(x) = x - u* + mu_low / r
    CHECK(U.U(u + 2.0) == doctest::Approx(2.0 + 0.3 / 0.1).epsilon(1e-10));
}

TEST_CASE("downgraded abm degenerates with a warning when C >= mu_low / r") {
    const auto U = make_downgraded_abm(0.3, 1.0, 0.1, 5.0);
    CHECK(U.u_star == 0.0);
    CHECK_FALSE(U.warning.empty());
    CHECK(U.U(1.0) == doctest::Approx(6.0));
}

TEST_CASE("validation passes on the shipped configurations") {
    for (auto cfg : {fx::benchmark_config(), fx::linear_config(), fx::twocases_config()}) {
        auto m = build_model(cfg);
        m->x_max = 10.0;
        const auto rep = validate_model(*m, 128);
        for (const auto& c : rep.checks) CHECK_MESSAGE(c.passed, c.name << ": " << c.detail);
    }
}

TEST_CASE("validation flags a drift derivative above r") {
    auto m = build_model(fx::benchmark_config());
    m->x_max = 10.0;
    m->diffusion.mu_prime = [](double) { return 0.2; };
    const auto rep = validate_model(*m, 64);
    CHECK_FALSE(rep.passed());
    REQUIRE(rep.find("mu_prime_below_r"));
    CHECK_FALSE(rep.find("mu_prime_below_r")->passed);
    CHECK_FALSE(rep.find("mu_prime_consistent")->passed);
}

TEST_CASE("validation preconditions") {
    auto m = build_model(fx::benchmark_config());
    m->x_max = 0.0;
    CHECK_THROWS_AS(validate_model(*m, 64), ParameterError);
    m->x_max = 5.0;
    CHECK_THROWS_AS(validate_model(*m, 8), ParameterError);
}
