#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "tipping/verifier.hpp"

using namespace tipping;

TEST_CASE("benchmark surface passes the HJB, diagonal and l checks") {
    const auto& W = *fx::benchmark().surface;
    const auto hjb = verify_hjb(W, 256, 128);
    CHECK(hjb.passed());
    CHECK(hjb.max_abs_pde_j1 < 1e-5);
    CHECK(hjb.counts[0] > 0);
    CHECK(hjb.counts[1] > 0);
    CHECK(hjb.counts[2] > 0);
    const auto d = verify_neumann_and_T(W, 64);
    CHECK(d.passed());
    CHECK(d.min_t_slack >= -1e-7);
    CHECK(std::abs(d.mbar_left - d.mbar_right) < 1e-5);
    const auto l = verify_l_monotone(W, 64);
    CHECK(l.passed());
    CHECK(l.max_l <= 1e-10);
}

TEST_CASE("J2 residual matches the closed form") {
    const auto& s = fx::benchmark();
    const auto& W = *s.surface;
    const auto& b = W.boundary();
    for (double m : {0.3, 0.8, 2.0}) {
        const double x = b(m) + 1.0;
        const auto d = fd_derivs(W, x, m, default_stencil(W));
        const double pde = s.model->diffusion.generator(W.W(x, m), d.Wx, d.Wxx, x);
        const double F = s.model->tipping.F(m);
        const double expect = (0.5 - 0.1 * x - 0.5 + 0.1 * b(m)) * F;
        CHECK(std::abs(pde - expect) < 1e-10);
    }
}

TEST_CASE("l vanishes at mbar; l' closed forms") {
    const auto& s = fx::benchmark();
    const auto& W = *s.surface;
    const double mb = W.mbar();
    CHECK(std::abs(l_value(W, mb)) < 1e-12);
    const double F = s.model->tipping.F(mb);
    const double E = eval_E(mb, mb, *s.aux);
    CHECK(l_prime(W, mb) == doctest::Approx(0.1 * F * (E - 1.0)).epsilon(1e-8));
    CHECK(l_prime(W, mb) < 0.0);
    CHECK(l_prime(W, 5.0) == doctest::Approx(0.1 * (0.0 - 1.0)).epsilon(1e-12));
}

TEST_CASE("J3 Neumann holds exactly above mbar") {
    const auto& W = *fx::benchmark().surface;
    const auto d = verify_neumann_and_T(W, 64);
    for (const auto& p : d.points)
        if (p.m > W.mbar() + 1e-3) CHECK(std::abs(p.W_m - p.Uf) < 1e-6);
}

TEST_CASE("shifted seam fails smooth fit") {
    const auto& s = fx::benchmark();
    const ValueSurface shifted(s.boundary, 0.01);
    const auto hjb = verify_hjb(shifted, 64, 32);
    CHECK_FALSE(hjb.passed());
    bool smooth = false;
    for (const auto& v : hjb.violations) smooth = smooth || v.check == "smooth_fit_x";
    CHECK(smooth);
}

TEST_CASE("residuals shrink under lattice refinement of the stencil") {
    const auto& W = *fx::benchmark().surface;
    HjbOptions a, b;
    a.stencil_h = 4e-3;
    b.stencil_h = 2e-3;
    const double ra = verify_hjb(W, 64, 32, a).max_abs_pde_j1;
    const double rb = verify_hjb(W, 64, 32, b).max_abs_pde_j1;
    CHECK(rb < 0.5 * ra);
}

TEST_CASE("twocases surface passes") {
    const auto& W = *fx::twocases().surface;
    CHECK(verify_hjb(W, 256, 128).passed());
    CHECK(verify_neumann_and_T(W, 64).passed());
    CHECK(verify_l_monotone(W, 64).passed());
}
