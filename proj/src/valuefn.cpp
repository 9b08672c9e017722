#include "tipping/valuefn.hpp"

#include <algorithm>
#include <cmath>

#include "tipping/error.hpp"
#include "tipping/numerics.hpp"

namespace tipping {

const char* region_name(Region r) {
    switch (r) {
        case Region::J1: return "J1";
        case Region::J2: return "J2";
        case Region::J3: return "J3";
    }
    return "?";
}

AuxCoefficients coeffs_AB(double m, const Boundary& boundary) {
    if (m < 0.0 || m > boundary.mbar() * (1.0 + 1e-12)) throw DomainError("coeffs_AB: need 0 <= m <= mbar");
    const Model& md = boundary.model();
    const auto& fp = md.fundamentals;
    const double b = boundary(m);
    const double Fm = md.tipping.F(m);
    const double k = md.diffusion.mu(b) / md.diffusion.r;
    const double D = fp.D(b);
    return {Fm / D * (fp.phi(b) - k * fp.phi_p(b)), -Fm / D * (fp.psi(b) - k * fp.psi_p(b))};
}

ValueSurface::ValueSurface(std::shared_ptr<const Boundary> boundary, double seam_shift)
    : boundary_(std::move(boundary)), seam_shift_(seam_shift), mbar_(boundary_->mbar()) {
    const Model& md = model();
    const auto& t = md.tipping;
    const auto& U = md.downgraded.U;
    mu_over_r_F_mbar_ = md.diffusion.mu(mbar_) / md.diffusion.r * t.F(mbar_);

    // prefix table of \int_{mbar}^{s} (U f + F) on [mbar, max(x_max, ybar)], ybar inserted as a node
    prefix_end_ = std::max(x_max(), t.ybar);
    const int n = 1024;
    prefix_s_.clear();
    for (int i = 0; i < n; ++i) prefix_s_.push_back(mbar_ + (prefix_end_ - mbar_) * i / (n - 1));
    if (t.ybar > mbar_ && t.ybar < prefix_end_) {
        prefix_s_.push_back(t.ybar);
        std::sort(prefix_s_.begin(), prefix_s_.end());
        prefix_s_.erase(std::unique(prefix_s_.begin(), prefix_s_.end()), prefix_s_.end());
    }
    const double yb = t.ybar;
    auto g = [&](double s) { return s > yb ? 1.0 : U(s) * t.f(s) + t.F(s); };
    prefix_v_.assign(prefix_s_.size(), 0.0);
    for (std::size_t i = 1; i < prefix_s_.size(); ++i)
        prefix_v_[i] = prefix_v_[i - 1] + num::adaptive_simpson(g, prefix_s_[i - 1], prefix_s_[i], 1e-13);
}

double ValueSurface::j3_integral(double m) const {
    if (m <= mbar_) return 0.0;
    const auto& t = model().tipping;
    if (m >= prefix_end_) return prefix_v_.back() + (m - prefix_end_);
    auto it = std::upper_bound(prefix_s_.begin(), prefix_s_.end(), m);
    const std::size_t i = static_cast<std::size_t>(it - prefix_s_.begin()) - 1;
    const auto& U = model().downgraded.U;
    const double yb = t.ybar;
    auto g = [&](double s) { return s > yb ? 1.0 : U(s) * t.f(s) + t.F(s); };
    return prefix_v_[i] + num::adaptive_simpson(g, prefix_s_[i], m, 1e-13);
}

double ValueSurface::seam(double m) const { return (1.0 + seam_shift_) * (*boundary_)(m); }

AuxCoefficients ValueSurface::coeffs(double m) const { return coeffs_AB(m, *boundary_); }

Region ValueSurface::classify(double x, double m) const {
    if (m < 0.0 || x < m) throw DomainError("classify: (x, m) outside {x >= m >= 0}");
    if (m >= mbar_) return Region::J3;
    return x <= seam(m) ? Region::J1 : Region::J2;
}

double ValueSurface::W_branch(double x, double m, Region r) const {
    const Model& md = model();
    const auto& fp = md.fundamentals;
    const double Fm = md.tipping.F(m);
    switch (r) {
        case Region::J1: {
            const auto c = coeffs(m);
            return c.A * fp.psi(x) + c.B * fp.phi(x);
        }
        case Region::J2: {
            if (seam_shift_ != 0.0) {
                const double s = seam(m);
                return W_branch(s, m, Region::J1) + (x - s) * Fm;
            }
            const double b = (*boundary_)(m);
            return (x - b) * Fm + md.diffusion.mu(b) / md.diffusion.r * Fm;
        }
        case Region::J3:
            return mu_over_r_F_mbar_ + (x - m) * Fm + j3_integral(m);
    }
    return 0.0;
}

double ValueSurface::W(double x, double m) const { return W_branch(x, m, classify(x, m)); }

double ValueSurface::Vbar(double x) const {
    if (x < 0.0) throw DomainError("Vbar: need x >= 0");
    const Model& md = model();
    return W(x, x) + md.downgraded.U(x) * (1.0 - md.tipping.F(x));
}

double ValueSurface::T(double m, int grid_n) const {
    if (m < 0.0) throw DomainError("T: need m >= 0");
    if (grid_n < 64) throw ParameterError("T: grid_n must be >= 64");
    if (m == 0.0) return W(0.0, 0.0);
    const Model& md = model();
    const auto& F = md.tipping.F;
    const auto& U = md.downgraded.U;
    const double Fm = F(m);
    auto bracket = [&](double h) {
        const double y = std::max(m - h, 0.0);
        return h * Fm + U(y) * (Fm - F(y)) + W(y, y);
    };
    int best = 0;
    double best_v = bracket(0.0);
    for (int k = 1; k <= grid_n; ++k) {
        const double v = bracket(m * k / grid_n);
        if (v > best_v) {
            best_v = v;
            best = k;
        }
    }
    const double lo = m * std::max(best - 1, 0) / grid_n;
    const double hi = m * std::min(best + 1, grid_n) / grid_n;
    const auto g = num::golden_max(bracket, lo, hi, 1e-8);
    return std::max(best_v, g.value);
}

Region classify_region(double x, double m, const ValueSurface& surface) { return surface.classify(x, m); }
double eval_W(double x, double m, const ValueSurface& surface) { return surface.W(x, m); }
double eval_Vbar(double x, const ValueSurface& surface) { return surface.Vbar(x); }
double apply_T(const ValueSurface& surface, double m, int grid_n) { return surface.T(m, grid_n); }

}  // namespace tipping
