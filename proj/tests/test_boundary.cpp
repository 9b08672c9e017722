#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "tipping/boundary.hpp"
#include "tipping/error.hpp"

using namespace tipping;

TEST_CASE("vector field: zero at eta, zero above ybar, diagonal closed form") {
    const auto& s = fx::benchmark();
    const AuxiliarySolution& a = *s.aux;
    const Model& m = *s.model;
    for (double mm : {0.2, 0.5, 0.9}) {
        CHECK(std::abs(eval_E(a.eta_exact(mm), mm, a)) < 1e-8);
        const double expect = m.tipping.H(mm) * (0.5 / 0.1 - m.downgraded.U(mm)) / 1.0;
        CHECK(eval_E(mm, mm, a) == doctest::Approx(expect).epsilon(1e-10));
    }
    CHECK(eval_E(2.0, 1.5, a) == 0.0);
    CHECK_THROWS_AS(eval_E(2.0, 0.0, a), DomainError);
}

TEST_CASE("initial slope is finite and nonnegative; N_x(x0, 0) < 0") {
    for (const auto* s : {&fx::benchmark(), &fx::linear()}) {
        const double sl = initial_slope(*s->aux);
        CHECK(std::isfinite(sl));
        CHECK(sl >= 0.0);
        const double x0 = s->aux->x0();
        CHECK(aux_N_x(s->aux->problem(), x0, 0.0) < 0.0);
    }
}

TEST_CASE("structure on the benchmark") {
    const auto& s = fx::benchmark();
    const Boundary& b = *s.boundary;
    const AuxiliarySolution& a = *s.aux;
    CHECK(b(0.0) == doctest::Approx(a.x0()).epsilon(1e-14));
    CHECK(b.mbar() > 0.0);
    CHECK(b.mbar() < a.xbar());
    CHECK(b.b_prime_at_mbar() < 1.0 - 1e-6);
    CHECK(b(b.mbar()) == doctest::Approx(b.mbar()).epsilon(1e-10));
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
        const double m = b.mbar() * i / 1000.0;
        const double v = b(m);
        CHECK(v >= prev - 1e-12);
        CHECK(v <= a.eta_exact(m) + 1e-8);
        if (m < b.mbar()) CHECK(v > m + 1e-10);
        prev = v;
    }
    for (double s2 : b.slopes()) CHECK(s2 >= -1e-12);
    // flat above ybar = 1
    REQUIRE(b.has_flat_part());
    CHECK(b.flat_from() == doctest::Approx(1.0));
    for (double m : {1.0, 1.5, 2.5, b.mbar()}) CHECK(b(m) == b(1.0));
    CHECK(b.mbar() == doctest::Approx(b(1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(b(b.mbar() + 0.1), DomainError);
}

TEST_CASE("slope start and sequence start agree at 0.1 xbar") {
    const auto& s = fx::benchmark();
    BoundaryOptions o;
    o.start = StartScheme::Sequence;
    const Boundary seq = integrate_boundary(s.aux, o);
    const double m = 0.1 * s.aux->xbar();
    CHECK(std::abs(seq(m) - (*s.boundary)(m)) < 1e-5);
}

TEST_CASE("tolerance halving moves b(mbar / 2) by less than 10 rel_tol xbar") {
    const auto& s = fx::twocases();
    const Boundary b1 = integrate_boundary(s.aux, 1e-8, 1e-10);
    const Boundary b2 = integrate_boundary(s.aux, 5e-9, 5e-11);
    const double m = 0.5 * b1.mbar();
    CHECK(std::abs(b1(m) - b2(m)) < 10.0 * 1e-8 * s.aux->xbar());
}

TEST_CASE("perturbed starts contract") {
    const auto& s = fx::benchmark();
    const double m0 = 1e-4 * s.aux->xbar();
    const double end = 0.5 * s.boundary->mbar();
    const auto up = integrate_trajectory(*s.aux, m0, s.aux->x0() + 1e-6, std::min(end, 0.99), 1e-11, 1e-13);
    const auto dn = integrate_trajectory(*s.aux, m0, s.aux->x0() - 1e-6, std::min(end, 0.99), 1e-11, 1e-13);
    const double m_eval = std::min(end, 0.99);
    CHECK(std::abs(up(m_eval) - dn(m_eval)) <= 2e-6 + 1e-12);
}

TEST_CASE("twocases boundary: no flat part below xbar, mbar below u*") {
    const auto& s = fx::twocases();
    CHECK(s.boundary->mbar() < s.model->downgraded.u_star);
    CHECK(s.boundary->b_prime_at_mbar() < 1.0);
}

TEST_CASE("field monotonicity on the benchmark and twocases") {
    for (const auto* s : {&fx::benchmark(), &fx::twocases()}) {
        const auto rep = check_field_monotonicity(*s->aux, 64);
        CHECK(rep.diagonal_decreasing);
        CHECK(rep.slices_decreasing);
    }
}
