#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace tipping {

using Fn = std::function<double(double)>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ConstantCoefficients {
    double mu;
    double sigma;
};

struct DiffusionSpec {
    Fn mu, sigma;
    Fn mu_prime, mu_second, sigma_prime;
    double r = 0.0;
    double alpha = -kInf;
    std::string kind = "custom";
    // Present for arithmetic Brownian motion; the simulator uses it to skip std::function calls.
    std::optional<ConstantCoefficients> constant;

    double generator(double u, double up, double upp, double x) const {
        const double s = sigma(x);
        return mu(x) * up + 0.5 * s * s * upp - r * u;
    }
};

DiffusionSpec make_abm_diffusion(double mu0, double sigma0, double r);

struct TippingLaw {
    Fn f, F;
    double ybar = 0.0;
    std::string kind;
    Fn quantile;  // optional closed-form inverse CDF

    // f/F; +inf at m = 0 where F vanishes.
    double H(double m) const;
    // Inverse CDF on [0, ybar]; Brent on F when no closed form is attached.
    double inverse_cdf(double u) const;
};

TippingLaw make_uniform_tipping(double ybar);
TippingLaw make_twocases_tipping(double c, double eps, double xbar);
TippingLaw make_table_tipping(std::vector<double> x, std::vector<double> f);
TippingLaw load_tipping_table(const std::string& csv_path);

struct DowngradedValue {
    Fn U, U_prime, U_second;
    double u_star = 0.0;
    std::string kind;
    std::string warning;  // set when the construction is degenerate (C >= mu_low / r)
};

DowngradedValue make_linear_downgraded();
DowngradedValue make_downgraded_abm(double mu_low, double sigma0, double r, double terminal);

struct FundamentalPair {
    Fn psi, psi_p, psi_pp;
    Fn phi, phi_p, phi_pp;
    std::string provider;

    // D(x, m) = psi'(x) phi(m) - phi'(x) psi(m); D(x) = D(x, x).
    double D(double x, double m) const { return psi_p(x) * phi(m) - phi_p(x) * psi(m); }
    double D(double x) const { return D(x, x); }
};

struct AbmRoots {
    double plus;
    double minus;
};

// Roots of (sigma^2/2) b^2 + mu b - r = 0.
AbmRoots abm_roots(double mu0, double sigma0, double r);
FundamentalPair make_abm_fundamentals(double mu0, double sigma0, double r);

struct Model {
    DiffusionSpec diffusion;
    TippingLaw tipping;
    DowngradedValue downgraded;
    FundamentalPair fundamentals;
    double x_max = 0.0;  // <= 0: resolved to 2 max(xbar, ybar, x0) by the solver
};

struct CheckResult {
    std::string name;
    bool passed = true;
    double worst_x = 0.0;
    double worst_value = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool passed() const;
    const CheckResult* find(const std::string& name) const;
};

ValidationReport validate_model(const Model& model, int grid_n);

}  // namespace tipping
