#pragma once
// Small scalar toolkit: bracketed roots, 1-d maximization, quadrature,
// monotone Hermite interpolation and an embedded Dormand-Prince 5(4) stepper.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "tipping/error.hpp"

namespace tipping::num {

// Brent's method. fa, fb are f(a), f(b) and must have opposite signs (or one is 0).
template <class F>
double brent_root(F&& f, double a, double b, double fa, double fb, double xtol, int max_iter = 300) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0))
        throw RangeError("brent_root: root not bracketed", a, b, fa, fb);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * eps * std::fabs(b) + 0.5 * xtol;
        const double xm = 0.5 * (c - b);
        if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
        if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc, rr = fb / fc;
                p = s * (2.0 * xm * qq * (qq - rr) - (b - a) * (rr - 1.0));
                q = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::fabs(p);
            const double min1 = 3.0 * xm * q - std::fabs(tol1 * q);
            const double min2 = std::fabs(e * q);
            if (2.0 * p < std::min(min1, min2)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::fabs(d) > tol1) ? d : std::copysign(tol1, xm);
        fb = f(b);
    }
    throw NumericalError("brent_root: iteration limit reached");
}

template <class F>
double brent_root(F&& f, double a, double b, double xtol) {
    const double fa = f(a), fb = f(b);
    return brent_root(f, a, b, fa, fb, xtol);
}

struct Argmax {
    double x;
    double value;
};

// Golden-section search for a maximum of a unimodal function on [a, b].
template <class F>
Argmax golden_max(F&& f, double a, double b, double tol) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d; d = c; fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? Argmax{c, fc} : Argmax{d, fd};
}

namespace detail {
template <class F>
double simpson_rec(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                   int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 40) {
    if (b == a) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Piecewise cubic Hermite interpolant. Slopes are either supplied or estimated
// (Fritsch-Butland harmonic mean); with `monotone` the Fritsch-Carlson limiter is applied.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y, std::vector<double> slopes = {},
                  bool monotone = true);

    double operator()(double t) const;
    double derivative(double t) const;

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& y() const { return y_; }
    const std::vector<double>& slopes() const { return d_; }
    bool empty() const { return x_.empty(); }

private:
    std::size_t locate(double t) const;
    std::vector<double> x_, y_, d_;
};

// Dormand-Prince 5(4) step with Hairer's dense output.
struct DenseStep {
    double t0 = 0.0, h = 0.0;
    double y0 = 0.0, y1 = 0.0;
    double r2 = 0.0, r3 = 0.0, r4 = 0.0, r5 = 0.0;

    double t1() const { return t0 + h; }
    double eval(double t) const {
        const double th = (t - t0) / h, th1 = 1.0 - th;
        return y0 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
    }
};

struct Dopri5Options {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double h_init = 0.0;  // 0: pick from the span
    double h_min = 1e-14;
    double h_max = std::numeric_limits<double>::infinity();
    long max_steps = 1000000;
};

struct Dopri5Stats {
    long accepted = 0;
    long rejected = 0;
    long evaluations = 0;
};

// Integrates y' = f(t, y) from t0 to t_end. After every accepted step the observer
// receives the (mutable) step; it may overwrite y1 (projection) and returns false to stop.
template <class Rhs, class Obs>
Dopri5Stats dopri5(Rhs&& f, double t0, double y0, double t_end, const Dopri5Options& opt, Obs&& observer) {
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                     a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;
    constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                     d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                     d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    Dopri5Stats st;
    double t = t0, y = y0;
    double h = opt.h_init > 0.0 ? opt.h_init : 1e-6 * std::fabs(t_end - t0);
    double k1 = f(t, y);
    ++st.evaluations;
    while (t < t_end) {
        if (st.accepted + st.rejected >= opt.max_steps) throw NumericalError("dopri5: step budget exhausted");
        h = std::min(h, opt.h_max);
        const bool last = t + h >= t_end;
        if (last) h = t_end - t;
        const double k2 = f(t + c2 * h, y + h * a21 * k1);
        const double k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
        const double k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const double k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const double k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const double y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        const double k7 = f(t + h, y1);
        st.evaluations += 6;
        const double errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double sc = opt.abs_tol + opt.rel_tol * std::max(std::fabs(y), std::fabs(y1));
        const double err = std::fabs(errv) / sc;
        if (!std::isfinite(err)) {
            ++st.rejected;
            h *= 0.2;
            if (h < opt.h_min) throw NumericalError("dopri5: non-finite field value");
            continue;
        }
        if (err <= 1.0) {
            DenseStep s;
            s.t0 = t;
            s.h = h;
            s.y0 = y;
            s.y1 = y1;
            const double ydiff = y1 - y;
            const double bspl = h * k1 - ydiff;
            s.r2 = ydiff;
            s.r3 = bspl;
            s.r4 = ydiff - h * k7 - bspl;
            s.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            ++st.accepted;
            const bool go_on = observer(s);
            t = last ? t_end : s.t1();
            if (s.y1 != y1) {
                y = s.y1;
                k1 = f(t, y);
                ++st.evaluations;
            } else {
                y = y1;
                k1 = k7;
            }
            if (!go_on) break;
            const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 10.0;
            h *= std::clamp(fac, 0.2, 10.0);
        } else {
            ++st.rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            if (h < opt.h_min) throw NumericalError("dopri5: step size collapsed");
        }
    }
    return st;
}

}  // namespace tipping::num
