#include "tipping/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tipping/error.hpp"

namespace tipping {

double eval_E(double x, double m, const AuxiliarySolution& aux) {
    const Model& md = aux.model();
    if (m <= 0.0) throw DomainError("eval_E: m = 0 is singular, use initial_slope");
    if (!(x > 0.0)) throw DomainError("eval_E: need x > 0");
    if (m > md.tipping.ybar) return 0.0;
    const auto& d = md.diffusion;
    const double G = 1.0 - d.mu_prime(x) / d.r;
    return md.tipping.H(m) * aux.N(x, m) / (G * md.fundamentals.D(x, m));
}

double initial_slope(const AuxiliarySolution& aux) {
    const Model& md = aux.model();
    const double x0 = aux.x0();
    const double h = 1e-6 * aux.xbar();
    const double Nx = (aux.N(x0 + h, 0.0) - aux.N(x0 - h, 0.0)) / (2.0 * h);
    // one-sided in m: N is not assumed meaningful below m = 0
    const double Nm = (-3.0 * aux.N(x0, 0.0) + 4.0 * aux.N(x0, h) - aux.N(x0, 2.0 * h)) / (2.0 * h);
    const double G = 1.0 - md.diffusion.mu_prime(x0) / md.diffusion.r;
    const double den = G * md.fundamentals.D(x0, 0.0) - Nx;
    if (!(den > 0.0)) throw NumericalError("initial_slope: nonpositive denominator");
    return Nm / den;
}

Boundary::Boundary(std::shared_ptr<const AuxiliarySolution> aux, std::vector<double> grid_m, std::vector<double> b,
                   std::vector<double> slopes, double mbar, double b_prime_at_mbar, StartScheme scheme,
                   double start_slope, num::Dopri5Stats stats)
    : aux_(std::move(aux)),
      grid_m_(std::move(grid_m)),
      b_(std::move(b)),
      slopes_(std::move(slopes)),
      mbar_(mbar),
      b_prime_at_mbar_(b_prime_at_mbar),
      flat_from_(grid_m_.back()),
      scheme_(scheme),
      start_slope_(start_slope),
      stats_(stats),
      interp_(grid_m_, b_, slopes_) {}

double Boundary::operator()(double m) const {
    if (m < 0.0 || m > mbar_ * (1.0 + 1e-12)) throw DomainError("boundary: m outside [0, mbar]");
    if (m >= flat_from_) return b_.back();
    return interp_(m);
}

double Boundary::slope(double m) const {
    if (m < 0.0 || m > mbar_ * (1.0 + 1e-12)) throw DomainError("boundary: m outside [0, mbar]");
    if (m >= flat_from_) return has_flat_part() ? 0.0 : b_prime_at_mbar_;
    return interp_.derivative(m);
}

namespace {

struct RunResult {
    std::vector<num::DenseStep> steps;
    bool hit = false;
    double m_hit = 0.0;
    num::Dopri5Stats stats;
};

RunResult run(const AuxiliarySolution& aux, double m0, double b0, double start_slope, double m_end, double rel_tol,
              double abs_tol, bool events) {
    RunResult res;
    auto rhs = [&](double m, double y) { return m <= 0.0 ? start_slope : eval_E(y, m, aux); };
    num::Dopri5Options opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = abs_tol;
    opt.h_init = 1e-3 * aux.xbar();
    opt.h_min = 1e-14 * aux.xbar();
    auto obs = [&](num::DenseStep& s) {
        if (events) {
            const double m1 = s.t1();
            const double eta_i = aux.eta(m1);
            if (s.y1 > eta_i - 1e-6) {
                const double eta_x = aux.eta_exact(m1);
                if (s.y1 > eta_x + 1e-6) {
                    std::ostringstream os;
                    os << "integrate_boundary: b exceeds eta at m=" << m1 << " (b=" << s.y1 << ", eta=" << eta_x
                       << ")";
                    throw NumericalError(os.str());
                }
                if (s.y1 > eta_x) s.y1 = eta_x;
            }
            if (s.y1 - m1 <= 0.0) {
                double lo = s.t0, hi = m1;
                for (int i = 0; i < 200 && hi - lo > 1e-14 * aux.xbar(); ++i) {
                    const double mid = 0.5 * (lo + hi);
                    (s.eval(mid) - mid > 0.0 ? lo : hi) = mid;
                }
                res.hit = true;
                res.m_hit = hi;
                res.steps.push_back(s);
                return false;
            }
        }
        res.steps.push_back(s);
        return true;
    };
    res.stats = num::dopri5(rhs, m0, b0, m_end, opt, obs);
    return res;
}

double eval_steps(const std::vector<num::DenseStep>& steps, double m) {
    auto it = std::upper_bound(steps.begin(), steps.end(), m,
                               [](double v, const num::DenseStep& s) { return v < s.t1(); });
    if (it == steps.end()) --it;
    return it->eval(m);
}

Boundary assemble(std::shared_ptr<const AuxiliarySolution> aux, const RunResult& rr, double m0, double b0,
                  StartScheme scheme, double start_slope, int resample) {
    const Model& md = aux->model();
    const double ybar = md.tipping.ybar;
    const double xbar = aux->xbar();
    double mbar, b_end, m_end, bprime;
    if (rr.hit) {
        mbar = rr.m_hit;
        m_end = mbar;
        b_end = mbar;
        bprime = mbar <= ybar ? eval_E(mbar, mbar, *aux) : 0.0;
    } else {
        m_end = rr.steps.back().t1();
        b_end = rr.steps.back().y1;
        if (ybar < xbar && m_end >= ybar * (1.0 - 1e-14)) {
            if (!(b_end > ybar)) throw NumericalError("integrate_boundary: inconsistent state at ybar");
            mbar = b_end;
            bprime = 0.0;
        } else {
            throw NumericalError("integrate_boundary: no absorption point found below xbar");
        }
    }

    std::vector<double> ms, bs;
    if (m0 > 0.0) {
        ms.push_back(0.0);
        bs.push_back(b0);
    }
    for (const auto& s : rr.steps) {
        ms.push_back(s.t0);
        bs.push_back(s.y0);
    }
    for (int i = 1; i < resample; ++i) {
        const double m = m_end * i / resample;
        if (m <= m0) continue;
        ms.push_back(m);
        bs.push_back(eval_steps(rr.steps, m));
    }
    ms.push_back(m_end);
    bs.push_back(b_end);

    std::vector<std::size_t> idx(ms.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return ms[a] < ms[b]; });
    std::vector<double> gm, gb, gs;
    const double tiny = 1e-12 * xbar;
    for (std::size_t k : idx) {
        if (!gm.empty() && ms[k] - gm.back() <= tiny) {
            if (ms[k] == m_end) {  // keep the exact end point
                gm.back() = ms[k];
                gb.back() = bs[k];
            }
            continue;
        }
        gm.push_back(ms[k]);
        gb.push_back(bs[k]);
    }
    gs.resize(gm.size());
    for (std::size_t i = 0; i < gm.size(); ++i) {
        const double m = gm[i];
        if (m == 0.0)
            gs[i] = m0 > 0.0 ? 0.0 : start_slope;
        else if (m < m0)
            gs[i] = 0.0;
        else
            gs[i] = eval_E(gb[i], m, *aux);
    }
    if (rr.hit) gs.back() = bprime;

    return Boundary(std::move(aux), std::move(gm), std::move(gb), std::move(gs), mbar, bprime, scheme, start_slope,
                    rr.stats);
}

}  // namespace

Boundary integrate_boundary(std::shared_ptr<const AuxiliarySolution> aux, double rel_tol, double abs_tol) {
    BoundaryOptions opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = abs_tol;
    return integrate_boundary(std::move(aux), opt);
}

Boundary integrate_boundary(std::shared_ptr<const AuxiliarySolution> aux, const BoundaryOptions& opt) {
    const Model& md = aux->model();
    if (!(md.tipping.f(0.0) > 0.0)) throw ParameterError("integrate_boundary: f(0) must be positive");
    const double m_end = std::min(md.tipping.ybar, aux->xbar());
    const double x0 = aux->x0();
    StartScheme scheme = opt.start;
    double s = 0.0;
    if (scheme == StartScheme::InitialSlope) {
        try {
            s = initial_slope(*aux);
        } catch (const NumericalError&) {
            scheme = StartScheme::Sequence;
        }
    }
    if (scheme == StartScheme::InitialSlope) {
        RunResult rr = run(*aux, 0.0, x0, s, m_end, opt.rel_tol, opt.abs_tol, true);
        return assemble(std::move(aux), rr, 0.0, x0, scheme, s, opt.resample);
    }
    // Monotone approximation: start at m_k = xbar 2^-k with b = x0; the deepest start is kept.
    const double m_k = aux->xbar() * std::ldexp(1.0, -opt.sequence_k_max);
    RunResult rr = run(*aux, m_k, x0, 0.0, m_end, opt.rel_tol, opt.abs_tol, true);
    return assemble(std::move(aux), rr, m_k, x0, StartScheme::Sequence, 0.0, opt.resample);
}

double Trajectory::operator()(double m) const {
    if (steps.empty()) throw DomainError("trajectory: empty");
    return eval_steps(steps, m);
}

Trajectory integrate_trajectory(const AuxiliarySolution& aux, double m0, double b0, double m_end, double rel_tol,
                                double abs_tol) {
    if (!(m0 > 0.0) || !(m_end > m0)) throw DomainError("integrate_trajectory: need 0 < m0 < m_end");
    RunResult rr = run(aux, m0, b0, 0.0, m_end, rel_tol, abs_tol, false);
    return Trajectory{std::move(rr.steps)};
}

FieldMonotonicityReport check_field_monotonicity(const AuxiliarySolution& aux, int grid_n) {
    if (grid_n < 32) throw ParameterError("check_field_monotonicity: grid_n must be >= 32");
    const Model& md = aux.model();
    const auto& d = md.diffusion;
    auto ratio = [&](double x, double m) {
        const double G = 1.0 - d.mu_prime(x) / d.r;
        return aux.N(x, m) / (G * md.fundamentals.D(x, m));
    };
    FieldMonotonicityReport rep;
    const double xbar = aux.xbar();
    double prev = 0.0;
    for (int i = 1; i <= grid_n; ++i) {
        const double m = xbar * i / grid_n;
        const double v = ratio(m, m);
        if (i > 1) {
            const double inc = v - prev;
            if (inc > 1e-12 * (1.0 + std::fabs(prev)) && inc > rep.diagonal_worst_increase) {
                rep.diagonal_decreasing = false;
                rep.diagonal_worst_increase = inc;
                rep.diagonal_worst_m = m;
            }
        }
        prev = v;
    }
    for (int i = 0; i < grid_n; ++i) {
        const double m = xbar * i / grid_n;
        const double eta = aux.eta_exact(m);
        double p = ratio(m, m);
        for (int j = 1; j < 64; ++j) {
            const double x = m + (eta - m) * j / 63.0;
            const double v = ratio(x, m);
            const double inc = v - p;
            if (inc > 1e-12 * (1.0 + std::fabs(p)) && inc > rep.slice_worst_increase) {
                rep.slices_decreasing = false;
                rep.slice_worst_increase = inc;
                rep.slice_worst_m = m;
                rep.slice_worst_x = x;
            }
            p = v;
        }
    }
    return rep;
}

}  // namespace tipping
