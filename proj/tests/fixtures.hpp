#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "tipping/config.hpp"

namespace fx {

inline tipping::RunConfig benchmark_config() { return tipping::parse_config("", {}); }

inline tipping::RunConfig linear_config() { return tipping::parse_config("[downgraded]\nkind = \"linear\"\n", {}); }

inline tipping::RunConfig twocases_config() {
    return tipping::parse_config(R"(
[diffusion]
mu = 4.0
sigma = 1.0
r = 0.4
[tipping]
kind = "twocases"
c = 0.05
eps = 0.01
[downgraded]
mu_low = 1.2
)",
                                 {});
}

// Solved pipelines are reused across test cases.
inline const tipping::Solved& benchmark() {
    static const tipping::Solved s = tipping::solve_pipeline(benchmark_config());
    return s;
}
inline const tipping::Solved& linear() {
    static const tipping::Solved s = tipping::solve_pipeline(linear_config());
    return s;
}
inline const tipping::Solved& twocases() {
    static const tipping::Solved s = tipping::solve_pipeline(twocases_config());
    return s;
}

// Roots of (sigma^2/2) b^2 + mu b - r = 0, written out independently of the library.
struct Roots {
    double plus, minus;
};
inline Roots quadratic_roots(double mu, double sigma, double r) {
    const double a = 0.5 * sigma * sigma;
    const double disc = std::sqrt(mu * mu + 4.0 * a * r);
    return {(-mu + disc) / (2.0 * a), (-mu - disc) / (2.0 * a)};
}

// Classical dividend barrier for ABM when U(x) = x near zero: 2/(b+ - b-) ln(-b-/b+).
inline double barrier_closed_form(double mu, double sigma, double r) {
    const Roots q = quadratic_roots(mu, sigma, r);
    return 2.0 / (q.plus - q.minus) * std::log(-q.minus / q.plus);
}

template <class F>
double bisect(F&& f, double lo, double hi, double tol = 1e-13) {
    double flo = f(lo);
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace fx
