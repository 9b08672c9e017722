#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tipping/boundary.hpp"

namespace tipping {

enum class Region { J1, J2, J3 };

const char* region_name(Region r);

class ValueSurface {
public:
    // seam_shift != 0 moves the J1/J2 seam to (1 + seam_shift) b(m) while keeping the
    // coefficients of the solved boundary (used to check that the verifier rejects it).
    explicit ValueSurface(std::shared_ptr<const Boundary> boundary, double seam_shift = 0.0);

    const Boundary& boundary() const { return *boundary_; }
    std::shared_ptr<const Boundary> boundary_ptr() const { return boundary_; }
    const AuxiliarySolution& aux() const { return boundary_->aux(); }
    const Model& model() const { return boundary_->model(); }

    double mbar() const { return mbar_; }
    double xbar() const { return aux().xbar(); }
    double x_max() const { return aux().x_max(); }
    double seam_shift() const { return seam_shift_; }

    // Seam location used by the classifier.
    double seam(double m) const;

    AuxCoefficients coeffs(double m) const;
    Region classify(double x, double m) const;
    double W(double x, double m) const;
    // Evaluates the formula of a given region regardless of the classifier.
    double W_branch(double x, double m, Region r) const;
    double Vbar(double x) const;
    double T(double m, int grid_n) const;
    // \int_{mbar}^{m} (U f + F) ds
    double j3_integral(double m) const;

private:
    std::shared_ptr<const Boundary> boundary_;
    double seam_shift_;
    double mbar_;
    double mu_over_r_F_mbar_;
    std::vector<double> prefix_s_, prefix_v_;
    double prefix_end_;
};

AuxCoefficients coeffs_AB(double m, const Boundary& boundary);
Region classify_region(double x, double m, const ValueSurface& surface);
double eval_W(double x, double m, const ValueSurface& surface);
double eval_Vbar(double x, const ValueSurface& surface);
double apply_T(const ValueSurface& surface, double m, int grid_n);

}  // namespace tipping
