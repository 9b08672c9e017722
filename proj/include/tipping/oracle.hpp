#pragma once

#include <string>
#include <vector>

#include "tipping/valuefn.hpp"

namespace tipping {

enum class Action : unsigned char { Wait, Extract, Absorb };

// Triangular lattice x_i = i h, m_j = j h, 0 <= j <= i <= n.
struct OracleGrid {
    double h = 0.0;
    double x_max = 0.0;
    int n = 0;
    std::vector<double> values;    // row-major triangle, index i (i + 1) / 2 + j
    std::vector<Action> policy;
    std::vector<double> dt_chain;  // per x row
    int iterations = 0;
    double residual = 0.0;
    double min_dt_chain = 0.0;
    double max_contraction = 0.0;  // largest observed sup-norm ratio of successive changes
    bool monotone_iterates = true; // iterates nondecreasing from the zero start

    static std::size_t index(int i, int j) { return static_cast<std::size_t>(i) * (i + 1) / 2 + j; }
    double V(int i, int j) const { return values[index(i, j)]; }
    Action action(int i, int j) const { return policy[index(i, j)]; }
    // Linear interpolation of V(x, x) along the diagonal.
    double diagonal(double x) const;
    // Lowest x_i above which EXTRACT is chosen for every lattice x in row m_j; x_max if none.
    double discrete_boundary(int j) const;
};

struct OracleOptions {
    double tol = 1e-10;
    int max_iter = 200000;
    double h_limit_fraction = 0.1;  // precondition h <= fraction * xbar
};

OracleGrid solve_dp(const Model& model, double xbar, double h, double x_max, const OracleOptions& opt = {});

struct BellmanCheck {
    double max_residual = 0.0;
    double min_gradient_excess = kInf;  // min over lattice of (V(x,m) - V(x-h,m)) - F(m) h
    double min_value = kInf;
    bool nondecreasing_in_x = true;
};

BellmanCheck check_bellman(const Model& model, const OracleGrid& grid);

struct GapPoint {
    double x, m, V, W, rel_gap;
};

struct OracleComparison {
    double max_rel_gap = 0.0;
    double worst_x = 0.0, worst_m = 0.0;
    double hausdorff = 0.0;  // discrete extraction boundary vs b on m <= mbar - 2h
    double max_boundary_gap = 0.0;
    std::vector<GapPoint> gap_map;
};

OracleComparison compare_with_surface(const OracleGrid& grid, const ValueSurface& surface);

void write_oracle_csv(const OracleGrid& grid, const std::string& path);

}  // namespace tipping
