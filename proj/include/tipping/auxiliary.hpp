#pragma once

#include <memory>
#include <vector>

#include "tipping/model.hpp"
#include "tipping/numerics.hpp"

namespace tipping {

// Fixed-floor problem: diffusion, its fundamental pair and the payoff U received at the floor.
struct AuxProblem {
    const DiffusionSpec& diffusion;
    const FundamentalPair& fundamentals;
    Fn terminal;
    Fn terminal_prime;
};

AuxProblem make_aux_problem(const Model& model);

double aux_N(const AuxProblem& p, double x, double m);
double aux_N_x(const AuxProblem& p, double x, double m);
double aux_N_m(const AuxProblem& p, double x, double m);

// Root of N(., m) in (m, hi); N(m, m) > 0 > N(hi, m) is required.
double aux_threshold(const AuxProblem& p, double m, double hi);

struct AuxCoefficients {
    double A;
    double B;
};

AuxCoefficients aux_coefficients(const AuxProblem& p, double m, double eta);
// V^m(x) for m below the floor threshold; eta = eta(m).
double aux_value(const AuxProblem& p, double x, double m, double eta);

double find_xbar(const Model& model);
double eval_N(double x, double m, const Model& model);
double solve_eta(double m, const Model& model, double xbar);
double solve_eta(double m, const Model& model);
double eval_aux_value(double x, double m, const Model& model, double xbar, double eta_m);

class AuxiliarySolution {
public:
    AuxiliarySolution(std::shared_ptr<const Model> model, double xbar, double x_max, std::vector<double> grid_m,
                      std::vector<double> grid_eta, std::vector<double> slopes);

    const Model& model() const { return *model_; }
    std::shared_ptr<const Model> model_ptr() const { return model_; }
    const AuxProblem& problem() const { return problem_; }

    double xbar() const { return xbar_; }
    double x0() const { return grid_eta_.front(); }
    double x_max() const { return x_max_; }

    // Interpolated threshold map; eta(m) = m for m >= xbar.
    double eta(double m) const;
    double eta_prime(double m) const;
    double eta_exact(double m) const;

    double N(double x, double m) const { return aux_N(problem_, x, m); }
    AuxCoefficients coefficients(double m) const;
    double Am(double m) const { return coefficients(m).A; }
    double Bm(double m) const { return coefficients(m).B; }
    // V^m(x), threshold solved directly (not interpolated).
    double value(double x, double m) const;

    const std::vector<double>& grid_m() const { return grid_m_; }
    const std::vector<double>& grid_eta() const { return grid_eta_; }

private:
    std::shared_ptr<const Model> model_;
    AuxProblem problem_;
    double xbar_;
    double x_max_;
    std::vector<double> grid_m_, grid_eta_;
    num::MonotoneCubic interp_;
};

// Working range: model.x_max when positive, otherwise 2 max(xbar, ybar, x0).
double resolve_x_max(const Model& model, double xbar, double x0);

AuxiliarySolution tabulate_eta(std::shared_ptr<const Model> model, int n);

}  // namespace tipping
