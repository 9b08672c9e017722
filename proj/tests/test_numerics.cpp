#include "doctest.h"

#include <cmath>

#include "tipping/numerics.hpp"

using namespace tipping;

TEST_CASE("brent finds roots of smooth and kinked functions") {
    const double r1 = num::brent_root([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-14);
    CHECK(r1 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
    const double r2 = num::brent_root([](double x) { return std::cos(x) - x; }, 0.0, 1.0, 1e-14);
    CHECK(std::abs(std::cos(r2) - r2) < 1e-13);
    const double r3 = num::brent_root([](double x) { return std::abs(x - 0.3) * (x - 0.3); }, -1.0, 2.0, 1e-12);
    CHECK(r3 == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("brent reports an unbracketed interval with both endpoint values") {
    try {
        num::brent_root([](double x) { return x * x + 1.0; }, -1.0, 1.0, 1e-12);
        FAIL("expected RangeError");
    } catch (const RangeError& e) {
        CHECK(e.f_lo == doctest::Approx(2.0));
        CHECK(e.f_hi == doctest::Approx(2.0));
    }
}

TEST_CASE("golden section on a concave function") {
    const auto a = num::golden_max([](double x) { return -(x - 0.7) * (x - 0.7) + 3.0; }, 0.0, 2.0, 1e-10);
    CHECK(a.x == doctest::Approx(0.7).epsilon(1e-8));
    CHECK(a.value == doctest::Approx(3.0));
}

TEST_CASE("adaptive simpson against closed forms") {
    CHECK(num::adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-12) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
    CHECK(num::adaptive_simpson([](double x) { return std::sqrt(x); }, 0.0, 1.0, 1e-12) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(num::adaptive_simpson([](double) { return 1.0; }, 2.0, 2.0, 1e-12) == 0.0);
}

TEST_CASE("monotone cubic keeps monotone data monotone and reproduces exact slopes") {
    std::vector<double> x{0.0, 1.0, 2.0, 3.0, 4.0}, y{0.0, 0.1, 0.1, 2.0, 2.1};
    num::MonotoneCubic m(x, y);
    double prev = -1.0;
    for (int i = 0; i <= 400; ++i) {
        const double v = m(4.0 * i / 400.0);
        CHECK(v >= prev - 1e-15);
        prev = v;
    }
    // cubic data with its exact slopes is reproduced exactly
    std::vector<double> xs, ys, ds;
    for (int i = 0; i <= 10; ++i) {
        const double t = 0.1 * i;
        xs.push_back(t);
        ys.push_back(t * t * t);
        ds.push_back(3.0 * t * t);
    }
    num::MonotoneCubic c(xs, ys, ds, false);
    CHECK(c(0.537) == doctest::Approx(0.537 * 0.537 * 0.537).epsilon(1e-13));
    CHECK(c.derivative(0.537) == doctest::Approx(3.0 * 0.537 * 0.537).epsilon(1e-12));
}

TEST_CASE("dopri5 integrates y' = -2ty to the gaussian with accurate dense output") {
    num::Dopri5Options opt;
    opt.rel_tol = 1e-11;
    opt.abs_tol = 1e-13;
    double worst = 0.0;
    auto st = num::dopri5([](double t, double y) { return -2.0 * t * y; }, 0.0, 1.0, 2.0, opt,
                          [&](num::DenseStep& s) {
                              const double mid = s.t0 + 0.37 * s.h;
                              worst = std::max(worst, std::abs(s.eval(mid) - std::exp(-mid * mid)));
                              worst = std::max(worst, std::abs(s.y1 - std::exp(-s.t1() * s.t1())));
                              return true;
                          });
    CHECK(worst < 1e-9);
    CHECK(st.accepted > 0);
}

TEST_CASE("dopri5 observer can stop early") {
    double t_stop = 0.0;
    num::dopri5([](double, double) { return 1.0; }, 0.0, 0.0, 10.0, {}, [&](num::DenseStep& s) {
        t_stop = s.t1();
        return s.y1 < 1.0;
    });
    CHECK(t_stop < 10.0);
    CHECK(t_stop >= 1.0);
}
