#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tipping/auxiliary.hpp"
#include "tipping/numerics.hpp"

namespace tipping {

// E(x, m) = H(m) N(x, m) / (G(x) D(x, m)), G = 1 - mu'/r; zero for m > ybar.
double eval_E(double x, double m, const AuxiliarySolution& aux);

// Slope of b at m = 0 from the first-order expansion of N around (x0, 0).
// Throws NumericalError when the denominator is not positive.
double initial_slope(const AuxiliarySolution& aux);

enum class StartScheme { InitialSlope, Sequence };

struct BoundaryOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    StartScheme start = StartScheme::InitialSlope;
    int sequence_k_max = 20;
    int resample = 512;
};

class Boundary {
public:
    Boundary(std::shared_ptr<const AuxiliarySolution> aux, std::vector<double> grid_m, std::vector<double> b,
             std::vector<double> slopes, double mbar, double b_prime_at_mbar, StartScheme scheme,
             double start_slope, num::Dopri5Stats stats);

    // b(m) for 0 <= m <= mbar; constant above ybar.
    double operator()(double m) const;
    double slope(double m) const;

    double x0() const { return b_.front(); }
    double mbar() const { return mbar_; }
    double b_prime_at_mbar() const { return b_prime_at_mbar_; }
    // Start of the flat part (ybar when ybar < mbar, otherwise mbar).
    double flat_from() const { return flat_from_; }
    bool has_flat_part() const { return flat_from_ < mbar_; }

    const AuxiliarySolution& aux() const { return *aux_; }
    std::shared_ptr<const AuxiliarySolution> aux_ptr() const { return aux_; }
    const Model& model() const { return aux_->model(); }

    const std::vector<double>& grid_m() const { return grid_m_; }
    const std::vector<double>& values() const { return b_; }
    const std::vector<double>& slopes() const { return slopes_; }
    StartScheme scheme() const { return scheme_; }
    double start_slope() const { return start_slope_; }
    const num::Dopri5Stats& stats() const { return stats_; }

private:
    std::shared_ptr<const AuxiliarySolution> aux_;
    std::vector<double> grid_m_, b_, slopes_;
    double mbar_, b_prime_at_mbar_, flat_from_;
    StartScheme scheme_;
    double start_slope_;
    num::Dopri5Stats stats_;
    num::MonotoneCubic interp_;
};

Boundary integrate_boundary(std::shared_ptr<const AuxiliarySolution> aux, double rel_tol, double abs_tol);
Boundary integrate_boundary(std::shared_ptr<const AuxiliarySolution> aux, const BoundaryOptions& opt);

// Plain solution of b' = E(b, m) from (m0, b0) to m_end, no events or clamping.
struct Trajectory {
    std::vector<num::DenseStep> steps;
    double operator()(double m) const;
};
Trajectory integrate_trajectory(const AuxiliarySolution& aux, double m0, double b0, double m_end, double rel_tol,
                                double abs_tol);

struct FieldMonotonicityReport {
    bool diagonal_decreasing = true;
    double diagonal_worst_m = 0.0;
    double diagonal_worst_increase = 0.0;
    bool slices_decreasing = true;
    double slice_worst_m = 0.0;
    double slice_worst_x = 0.0;
    double slice_worst_increase = 0.0;

    bool passed() const { return diagonal_decreasing && slices_decreasing; }
};

// (i) m -> N(m,m)/(G(m)D(m,m)) decreasing on (0, xbar];
// (ii) x -> N(x,m)/(G(x)D(x,m)) decreasing on [m, eta(m)] for each grid m.
FieldMonotonicityReport check_field_monotonicity(const AuxiliarySolution& aux, int grid_n);

}  // namespace tipping
