#include "tipping/verifier.hpp"

#include <algorithm>
#include <cmath>

#include "tipping/error.hpp"
#include "tipping/numerics.hpp"
#include "tipping/parallel.hpp"

namespace tipping {

namespace {

struct Stencil {
    double h;
    int dir;  // 0 central, +1 forward, -1 backward
};

// Picks a width and direction so that x + k h, k in {-3..3} as used, stays inside [lo, hi].
Stencil choose(double x, double lo, double hi, double h0) {
    double h = h0;
    if (hi - lo < 6.0 * h) h = (hi - lo) / 6.0;
    if (x - lo >= h && hi - x >= h) return {h, 0};
    if (x - lo < h) return {h, +1};
    return {h, -1};
}

template <class G>
Derivs apply(G&& g, double x, Stencil st) {
    const double h = st.h;
    if (st.dir == 0) {
        const double fm = g(x - h), f0 = g(x), fp = g(x + h);
        return {(fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)};
    }
    const double s = st.dir;
    const double f0 = g(x), f1 = g(x + s * h), f2 = g(x + 2.0 * s * h), f3 = g(x + 3.0 * s * h);
    return {s * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h), (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (h * h)};
}

}  // namespace

double default_stencil(const ValueSurface& s) {
    const auto& fp = s.model().fundamentals;
    const double x_max = s.x_max();
    double ell = kInf;
    for (int i = 0; i <= 16; ++i) {
        const double x = x_max * i / 16;
        ell = std::min({ell, std::fabs(fp.psi(x) / fp.psi_p(x)), std::fabs(fp.phi(x) / fp.phi_p(x))});
    }
    return std::min(1e-4 * x_max, 1e-3 * ell);
}

Derivs fd_derivs(const ValueSurface& s, double x, double m, double h_j1) {
    const Region r = s.classify(x, m);
    double lo = m, hi = kInf, h0 = h_j1;
    if (r == Region::J1) {
        hi = s.seam(m);
    } else {
        // affine in x: a wide stencil only reduces roundoff
        h0 = 1e-2 * s.x_max();
        if (r == Region::J2) lo = s.seam(m);
    }
    const Stencil st = choose(x, lo, hi, h0);
    if (!(st.h > 0.0)) throw NumericalError("fd_derivs: degenerate stencil");
    return apply([&](double v) { return s.W_branch(v, m, r); }, x, st);
}

HjbReport verify_hjb(const ValueSurface& s, int nx, int nm, const HjbOptions& opt) {
    if (nx < 2 || nm < 2) throw ParameterError("verify_hjb: lattice too small");
    const Model& md = s.model();
    const auto& d = md.diffusion;
    const auto& F = md.tipping.F;
    const double x_max = s.x_max(), xbar = s.xbar();
    const double h_j1 = opt.stencil_h > 0.0 ? opt.stencil_h : default_stencil(s);

    std::vector<std::pair<double, double>> lattice;
    for (int j = 0; j < nm; ++j) {
        const double m = xbar * j / (nm - 1);
        for (int i = 0; i < nx; ++i) {
            const double x = x_max * i / (nx - 1);
            if (x >= m) lattice.emplace_back(x, m);
        }
    }
    HjbReport rep;
    rep.points.resize(lattice.size());
    parallel_for(lattice.size(), [&](std::size_t k) {
        const auto [x, m] = lattice[k];
        ResidualPoint p;
        p.x = x;
        p.m = m;
        p.region = s.classify(x, m);
        p.W = s.W(x, m);
        const Derivs dv = fd_derivs(s, x, m, h_j1);
        const double sg = d.sigma(x);
        p.pde_residual = d.mu(x) * dv.Wx + 0.5 * sg * sg * dv.Wxx - d.r * p.W;
        p.gradient_slack = dv.Wx - F(m);
        rep.points[k] = p;
    });

    for (const auto& p : rep.points) {
        const double tol = opt.tol_pde * (1.0 + std::fabs(d.r * p.W));
        rep.counts[static_cast<int>(p.region)]++;
        if (p.region == Region::J1) {
            rep.max_abs_pde_j1 = std::max(rep.max_abs_pde_j1, std::fabs(p.pde_residual));
            rep.min_slack_j1 = std::min(rep.min_slack_j1, p.gradient_slack);
            if (std::fabs(p.pde_residual) > tol) rep.violations.push_back({"pde_j1", p.x, p.m, p.pde_residual, tol});
            if (p.gradient_slack < -opt.tol_slack)
                rep.violations.push_back({"gradient_j1", p.x, p.m, p.gradient_slack, opt.tol_slack});
        } else {
            const std::string tag = p.region == Region::J2 ? "j2" : "j3";
            rep.max_pde_j23 = std::max(rep.max_pde_j23, p.pde_residual);
            rep.max_abs_slack_j23 = std::max(rep.max_abs_slack_j23, std::fabs(p.gradient_slack));
            if (p.pde_residual > tol) rep.violations.push_back({"pde_" + tag, p.x, p.m, p.pde_residual, tol});
            if (std::fabs(p.gradient_slack) > opt.tol_slack)
                rep.violations.push_back({"gradient_" + tag, p.x, p.m, p.gradient_slack, opt.tol_slack});
        }
    }

    // seam: continuity and smooth fit, central differences straddling x = b(m)
    const double mbar = s.mbar();
    const double hs = default_stencil(s);
    for (int k = 1; k <= opt.seam_samples; ++k) {
        const double m = mbar * k / (opt.seam_samples + 1);
        const double b = s.seam(m);
        const double w1 = s.W_branch(b, m, Region::J1);
        const double w2 = s.W_branch(b, m, Region::J2);
        const double jump = std::fabs(w1 - w2) / (1.0 + std::fabs(w1));
        rep.max_seam_jump = std::max(rep.max_seam_jump, jump);
        if (jump > opt.seam_continuity_tol) rep.violations.push_back({"seam_continuity", b, m, jump, opt.seam_continuity_tol});
        const double h = std::min(hs, 0.5 * (b - m));
        const double fm = s.W(b - h, m), f0 = s.W(b, m), fp = s.W(b + h, m);
        const double wx = (fp - fm) / (2.0 * h);
        const double wxx = (fp - 2.0 * f0 + fm) / (h * h);
        const double gx = std::fabs(wx - F(m));
        rep.max_smooth_fit_x = std::max(rep.max_smooth_fit_x, gx);
        rep.max_smooth_fit_xx = std::max(rep.max_smooth_fit_xx, std::fabs(wxx));
        if (gx > opt.smooth_fit_tol) rep.violations.push_back({"smooth_fit_x", b, m, wx - F(m), opt.smooth_fit_tol});
        if (std::fabs(wxx) > opt.smooth_fit_xx_tol)
            rep.violations.push_back({"smooth_fit_xx", b, m, wxx, opt.smooth_fit_xx_tol});
    }
    return rep;
}

namespace {

// d/dm of g(m) = W(m, m), one-sided so that the stencil never crosses a seam in m.
double diag_derivative(const ValueSurface& s, double m, const std::vector<double>& seams, int force_dir = 0) {
    const double h0 = 0.1 * default_stencil(s);
    auto g = [&](double v) { return s.W(v, v); };
    double lo = 0.0, hi = kInf;
    for (double c : seams) {
        if (c < m) lo = std::max(lo, c);
        if (c > m) hi = std::min(hi, c);
    }
    Stencil st{h0, 0};
    if (force_dir != 0) {
        st.dir = force_dir;
    } else {
        st = choose(m, lo, hi, h0);
        // on a seam itself, take the left derivative (left-continuous convention)
        for (double c : seams)
            if (m == c && m - lo >= 3.0 * h0) st = {h0, -1};
    }
    return apply(g, m, st).Wx;
}

}  // namespace

DiagonalReport verify_neumann_and_T(const ValueSurface& s, int n, int t_grid) {
    if (n < 32) throw ParameterError("verify_neumann_and_T: n must be >= 32");
    const Model& md = s.model();
    const auto& t = md.tipping;
    const auto& U = md.downgraded.U;
    const double mbar = s.mbar();
    const std::vector<double> seams{mbar, t.ybar};
    std::vector<double> grid;
    for (int k = 1; k <= n; ++k) grid.push_back(s.xbar() * k / n);
    grid.push_back(mbar);
    std::sort(grid.begin(), grid.end());

    DiagonalReport rep;
    rep.points.resize(grid.size());
    const double h_j1 = default_stencil(s);
    parallel_for(grid.size(), [&](std::size_t k) {
        const double m = grid[k];
        DiagonalPoint p;
        p.m = m;
        const double dg = diag_derivative(s, m, seams);
        p.W_m = dg - fd_derivs(s, m, m, h_j1).Wx;
        p.Uf = U(m) * t.f(m);
        p.t_slack = s.W(m, m) - s.T(m, t_grid);
        rep.points[k] = p;
    });
    for (const auto& p : rep.points) {
        if (p.m <= mbar) {
            const double gap = std::fabs(p.W_m - p.Uf);
            rep.max_neumann_gap = std::max(rep.max_neumann_gap, gap);
            if (gap > 1e-5) rep.violations.push_back({"neumann_equality", p.m, p.m, p.W_m - p.Uf, 1e-5});
        } else {
            const double ex = p.W_m - p.Uf;
            rep.min_neumann_excess = std::min(rep.min_neumann_excess, ex);
            if (ex < -1e-8) rep.violations.push_back({"neumann_inequality", p.m, p.m, ex, 1e-8});
        }
        rep.min_t_slack = std::min(rep.min_t_slack, p.t_slack);
        if (p.t_slack < -1e-7) rep.violations.push_back({"t_condition", p.m, p.m, p.t_slack, 1e-7});
    }
    // one-sided diagonal derivatives at mbar (W_x(m, m) = F(m) on both sides)
    if (mbar - 0.3 * default_stencil(s) > 0.0) {
        rep.mbar_left = diag_derivative(s, mbar, {}, -1);
        rep.mbar_right = diag_derivative(s, mbar, {}, +1);
        const double gap = std::fabs(rep.mbar_left - rep.mbar_right);
        if (gap > 1e-5) rep.violations.push_back({"diagonal_kink_at_mbar", mbar, mbar, gap, 1e-5});
    }
    return rep;
}

double l_prime(const ValueSurface& s, double m) {
    const Model& md = s.model();
    const auto& d = md.diffusion;
    const double Fm = md.tipping.F(m);
    const double fm = md.tipping.f(m);
    const double H = Fm > 0.0 ? fm / Fm : 0.0;
    return d.r * Fm * ((d.mu_prime(m) / d.r - 1.0) + H * (d.mu(m) / d.r - md.downgraded.U(m)));
}

double l_value(const ValueSurface& s, double m) {
    const Model& md = s.model();
    const auto& d = md.diffusion;
    const auto& t = md.tipping;
    const double mbar = s.mbar();
    auto lin = [&](double v) { return t.F(v) * (d.mu(v) - d.r * v); };
    const double top = std::min(m, t.ybar);
    double integral = 0.0;
    if (top > mbar)
        integral = num::adaptive_simpson([&](double v) { return (md.downgraded.U(v) - v) * t.f(v); }, mbar, top, 1e-13);
    return lin(m) - lin(mbar) - d.r * integral;
}

LMonotoneReport verify_l_monotone(const ValueSurface& s, int n) {
    if (n < 32) throw ParameterError("verify_l_monotone: n must be >= 32");
    const double mbar = s.mbar(), x_max = s.x_max();
    LMonotoneReport rep;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const double m = mbar + (x_max - mbar) * k / (n - 1);
        const double lp = l_prime(s, m);
        if (k > 0) acc += 0.5 * (lp + rep.lp.back()) * (m - rep.m.back());
        rep.m.push_back(m);
        rep.lp.push_back(lp);
        rep.l_trap.push_back(acc);
        rep.max_l_prime = std::max(rep.max_l_prime, lp);
        rep.max_l = std::max(rep.max_l, acc);
        if (lp > 1e-10) rep.violations.push_back({"l_prime_positive", m, m, lp, 1e-10});
    }
    return rep;
}

}  // namespace tipping
