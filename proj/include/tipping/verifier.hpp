#pragma once

#include <string>
#include <vector>

#include "tipping/valuefn.hpp"

namespace tipping {

struct HjbOptions {
    double tol_pde = 1e-5;      // scaled by (1 + |r W|)
    double tol_slack = 1e-6;
    double stencil_h = 0.0;     // J1 stencil width; 0 selects default_stencil
    int seam_samples = 64;
    double seam_continuity_tol = 1e-9;
    double smooth_fit_tol = 1e-6;
    double smooth_fit_xx_tol = 1e-4;
};

struct ResidualPoint {
    double x = 0.0, m = 0.0;
    Region region = Region::J1;
    double W = 0.0;
    double pde_residual = 0.0;
    double gradient_slack = 0.0;
};

struct Violation {
    std::string check;
    double x = 0.0, m = 0.0;
    double value = 0.0;
    double tol = 0.0;
};

struct HjbReport {
    std::vector<ResidualPoint> points;
    std::vector<Violation> violations;
    double max_abs_pde_j1 = 0.0;
    double max_pde_j23 = -kInf;
    double min_slack_j1 = kInf;
    double max_abs_slack_j23 = 0.0;
    double max_seam_jump = 0.0;
    double max_smooth_fit_x = 0.0;
    double max_smooth_fit_xx = 0.0;
    int counts[3] = {0, 0, 0};

    bool passed() const { return violations.empty(); }
};

struct Derivs {
    double Wx;
    double Wxx;
};

// min(1e-4 x_max, 1e-3 l), l the shortest decay length psi/psi', phi/|phi'| on [0, x_max].
double default_stencil(const ValueSurface& s);

// Region-aware finite differences of x -> W(x, m); stencils never cross x = m or the seam.
Derivs fd_derivs(const ValueSurface& s, double x, double m, double h_j1);

HjbReport verify_hjb(const ValueSurface& surface, int nx, int nm, const HjbOptions& opt = {});

struct DiagonalPoint {
    double m = 0.0;
    double W_m = 0.0;      // d/dm W(m,m) - W_x(m,m)
    double Uf = 0.0;
    double t_slack = 0.0;  // W(m,m) - T[W](m)
};

struct DiagonalReport {
    std::vector<DiagonalPoint> points;
    std::vector<Violation> violations;
    double max_neumann_gap = 0.0;     // on (0, mbar]
    double min_neumann_excess = kInf; // above mbar
    double min_t_slack = kInf;
    double mbar_left = 0.0, mbar_right = 0.0;  // one-sided diagonal derivatives at mbar

    bool passed() const { return violations.empty(); }
};

DiagonalReport verify_neumann_and_T(const ValueSurface& surface, int n, int t_grid = 256);

// l(m) = F(m)(mu(m) - r m) - F(mbar)(mu(mbar) - r mbar) - r \int_{mbar}^m (U - s) f ds
double l_prime(const ValueSurface& surface, double m);
double l_value(const ValueSurface& surface, double m);

struct LMonotoneReport {
    std::vector<double> m, lp, l_trap;
    std::vector<Violation> violations;
    double max_l_prime = -kInf;
    double max_l = -kInf;

    bool passed() const { return violations.empty(); }
};

LMonotoneReport verify_l_monotone(const ValueSurface& surface, int n);

}  // namespace tipping
