#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "tipping/auxiliary.hpp"
#include "tipping/error.hpp"

using namespace tipping;

namespace {

// N(x, m) written out for ABM fundamentals psi = e^{b+ x}, phi = e^{b- x}.
double N_direct(double x, double m, double mu, double sigma, double r, const Fn& U) {
    const auto q = fx::quadratic_roots(mu, sigma, r);
    const double psi_x = std::exp(q.plus * x), phi_x = std::exp(q.minus * x);
    const double psi_m = std::exp(q.plus * m), phi_m = std::exp(q.minus * m);
    const double D_xm = q.plus * psi_x * phi_m - q.minus * phi_x * psi_m;
    const double D_xx = (q.plus - q.minus) * psi_x * phi_x;
    return phi_x * psi_m - psi_x * phi_m + mu / r * D_xm - D_xx * U(m);
}

}  // namespace

TEST_CASE("x0 for U(x) = x equals the classical dividend barrier") {
    const auto& s = fx::linear();
    CHECK(std::abs(s.aux->x0() - fx::barrier_closed_form(0.5, 1.0, 0.1)) < 1e-8);
}

TEST_CASE("xbar: mu0 / r for U(x) = x and an independent bisection for the abm value") {
    CHECK(fx::linear().aux->xbar() == doctest::Approx(5.0).epsilon(1e-12));
    const Model& m = *fx::benchmark().model;
    const double xb = fx::bisect([&](double x) { return 0.5 - 0.1 * m.downgraded.U(x); }, 0.0, 20.0);
    CHECK(std::abs(find_xbar(m) - xb) < 1e-10);
    CHECK(find_xbar(m) >= m.downgraded.u_star);
}

TEST_CASE("find_xbar range error when G has no sign change") {
    auto m = build_model(fx::benchmark_config());
    m->downgraded.U = [](double) { return 0.0; };
    m->x_max = 50.0;
    CHECK_THROWS_AS(find_xbar(*m), RangeError);
}

TEST_CASE("N agrees with the written-out formula and has the diagonal sign structure") {
    const Model& m = *fx::benchmark().model;
    const double xb = fx::benchmark().aux->xbar();
    for (double mm : {0.0, 0.5, 1.5, 3.0})
        for (double x : {mm, mm + 0.4, mm + 2.0}) {
            const double ref = N_direct(x, mm, 0.5, 1.0, 0.1, m.downgraded.U);
            CHECK(eval_N(x, mm, m) == doctest::Approx(ref).epsilon(1e-12));
        }
    const auto& fp = m.fundamentals;
    for (double mm : {0.3, 2.0, 4.0}) {
        const double expect = (0.5 / 0.1 - m.downgraded.U(mm)) * fp.D(mm, mm);
        CHECK(eval_N(mm, mm, m) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(eval_N(mm, mm, m) > 0.0);
    }
    CHECK(std::abs(eval_N(xb, xb, m)) < 1e-9 * fp.D(xb, xb));
}

TEST_CASE("eta: root of N, increasing, sign change, endpoint at xbar") {
    const auto& s = fx::benchmark();
    const AuxiliarySolution& a = *s.aux;
    const Model& m = *s.model;
    const double xb = a.xbar();
    double prev = -1.0;
    for (int i = 0; i <= 40; ++i) {
        const double mm = xb * i / 41.0;
        const double e = solve_eta(mm, m, xb);
        CHECK(e > mm);
        CHECK(e > prev);
        prev = e;
        const double scale = m.fundamentals.D(e, mm);
        CHECK(std::abs(eval_N(e, mm, m)) < 1e-9 * scale);
        const double d = 1e-4 * xb;
        CHECK(eval_N(e - d, mm, m) > 0.0);
        CHECK(eval_N(e + d, mm, m) < 0.0);
    }
    CHECK(a.eta(xb) == doctest::Approx(xb).epsilon(1e-8));
    CHECK(a.eta(xb + 1.0) == doctest::Approx(xb + 1.0));
}

TEST_CASE("interpolated eta matches direct solves off the grid") {
    const AuxiliarySolution& a = *fx::benchmark().aux;
    const auto& gm = a.grid_m();
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < gm.size(); ++i) {
        const double mid = 0.5 * (gm[i] + gm[i + 1]);
        worst = std::max(worst, std::abs(a.eta(mid) - a.eta_exact(mid)));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("dN/dx at eta equals (mu'/r - 1) D") {
    const auto& s = fx::benchmark();
    const Model& m = *s.model;
    for (double mm : {0.2, 1.0, 2.5}) {
        const double e = s.aux->eta(mm);
        const double h = 1e-5;
        const double fd = (eval_N(e + h, mm, m) - eval_N(e - h, mm, m)) / (2.0 * h);
        const double cf = (0.0 / 0.1 - 1.0) * m.fundamentals.D(e, mm);
        CHECK(fd == doctest::Approx(cf).epsilon(1e-6));
    }
}

TEST_CASE("auxiliary value: floor, smooth fit, concavity, lump branch, dominance") {
    const auto& s = fx::benchmark();
    const AuxiliarySolution& a = *s.aux;
    const Model& m = *s.model;
    const double xb = a.xbar();
    for (double mm : {0.0, 0.8, 2.0, 3.5}) {
        CHECK(std::abs(a.value(mm, mm) - m.downgraded.U(mm)) < 1e-9);
        const double e = a.eta_exact(mm);
        const double h = 1e-6;
        CHECK(std::abs((a.value(e, mm) - a.value(e - h, mm)) / h - 1.0) < 1e-5);
        for (int i = 1; i < 40; ++i) {
            const double x = mm + (e - mm) * i / 40.0;
            const double hh = 1e-3 * (e - mm);
            const double d2 = a.value(x + hh, mm) - 2.0 * a.value(x, mm) + a.value(x - hh, mm);
            CHECK(d2 <= 1e-8);
        }
        // continuity at eta and the post-threshold constant mu(eta)/r
        CHECK(a.value(e + 1.0, mm) == doctest::Approx(1.0 + 0.5 / 0.1).epsilon(1e-9));
    }
    CHECK(a.value(xb + 2.0, xb + 1.0) == doctest::Approx(1.0 + m.downgraded.U(xb + 1.0)));
    for (double m1 : {0.0, 1.0, 2.0})
        for (double m2 : {m1 + 0.5, m1 + 1.5})
            for (double x : {m2, m2 + 0.5, m2 + 3.0}) CHECK(a.value(x, m1) > a.value(x, m2));
}

TEST_CASE("auxiliary HJB residual") {
    const auto& s = fx::benchmark();
    const AuxiliarySolution& a = *s.aux;
    const auto& d = s.model->diffusion;
    for (double mm : {0.5, 2.0}) {
        const double e = a.eta_exact(mm);
        for (int i = 1; i < 30; ++i) {
            const double x = mm + (a.x_max() - mm) * i / 30.0;
            if (std::abs(x - e) < 1e-2) continue;
            const double h = 1e-4;
            const double v = a.value(x, mm);
            const double vx = (a.value(x + h, mm) - a.value(x - h, mm)) / (2.0 * h);
            const double vxx = (a.value(x + h, mm) - 2.0 * v + a.value(x - h, mm)) / (h * h);
            const double pde = d.generator(v, vx, vxx, x);
            CHECK(std::abs(std::max(pde, 1.0 - vx)) < 1e-6 * (1.0 + std::abs(v)));
        }
    }
}

TEST_CASE("tabulate_eta precondition") {
    auto m = build_model(fx::benchmark_config());
    CHECK_THROWS_AS(tabulate_eta(m, 10), ParameterError);
}
