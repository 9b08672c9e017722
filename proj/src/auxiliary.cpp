#include "tipping/auxiliary.hpp"

#include <cmath>
#include <sstream>

#include "tipping/error.hpp"

namespace tipping {

AuxProblem make_aux_problem(const Model& model) {
    return AuxProblem{model.diffusion, model.fundamentals, model.downgraded.U, model.downgraded.U_prime};
}

double aux_N(const AuxProblem& p, double x, double m) {
    const auto& fp = p.fundamentals;
    const double r = p.diffusion.r;
    return fp.phi(x) * fp.psi(m) - fp.psi(x) * fp.phi(m) + p.diffusion.mu(x) / r * fp.D(x, m) -
           fp.D(x) * p.terminal(m);
}

double aux_N_x(const AuxProblem& p, double x, double m) {
    const auto& fp = p.fundamentals;
    const auto& d = p.diffusion;
    const double Dxm = fp.D(x, m);
    const double Dx_xm = fp.psi_pp(x) * fp.phi(m) - fp.phi_pp(x) * fp.psi(m);
    const double dDx = fp.psi_pp(x) * fp.phi(x) - fp.phi_pp(x) * fp.psi(x);
    return -Dxm + d.mu_prime(x) / d.r * Dxm + d.mu(x) / d.r * Dx_xm - dDx * p.terminal(m);
}

double aux_N_m(const AuxProblem& p, double x, double m) {
    const auto& fp = p.fundamentals;
    const auto& d = p.diffusion;
    const double cross = fp.psi_p(x) * fp.phi_p(m) - fp.phi_p(x) * fp.psi_p(m);
    return fp.phi(x) * fp.psi_p(m) - fp.psi(x) * fp.phi_p(m) + d.mu(x) / d.r * cross -
           fp.D(x) * p.terminal_prime(m);
}

double aux_threshold(const AuxProblem& p, double m, double hi) {
    const double lo_val = aux_N(p, m, m);
    const double hi_val = aux_N(p, hi, m);
    if (!(lo_val > 0.0) || !(hi_val < 0.0)) {
        std::ostringstream os;
        os << "eta: N does not change sign on [" << m << ", " << hi << "]: N(lo)=" << lo_val
           << " N(hi)=" << hi_val;
        throw RangeError(os.str(), m, hi, lo_val, hi_val);
    }
    auto g = [&](double x) { return aux_N(p, x, m); };
    return num::brent_root(g, m, hi, lo_val, hi_val, 1e-13 * std::max(1.0, hi));
}

AuxCoefficients aux_coefficients(const AuxProblem& p, double m, double eta) {
    const auto& fp = p.fundamentals;
    const double D = fp.D(eta, m);
    const double Um = p.terminal(m);
    return {(fp.phi(m) - Um * fp.phi_p(eta)) / D, (Um * fp.psi_p(eta) - fp.psi(m)) / D};
}

double aux_value(const AuxProblem& p, double x, double m, double eta) {
    if (x > eta) return x - eta + p.diffusion.mu(eta) / p.diffusion.r;
    const auto c = aux_coefficients(p, m, eta);
    return c.A * p.fundamentals.psi(x) + c.B * p.fundamentals.phi(x);
}

double find_xbar(const Model& model) {
    const auto& d = model.diffusion;
    const auto& U = model.downgraded.U;
    auto G = [&](double x) { return d.mu(x) - d.r * U(x); };
    const double g0 = G(0.0);
    if (!(g0 > 0.0)) throw ParameterError("find_xbar: mu(0) - r U(0) must be positive");
    const double cap = model.x_max > 0.0 ? model.x_max : 1e8;
    double hi = model.downgraded.u_star + 1.0;
    double ghi = G(hi);
    while (ghi >= 0.0) {
        if (hi >= cap) throw RangeError("find_xbar: no sign change of mu - rU below cap", 0.0, hi, g0, ghi);
        hi = std::min(2.0 * hi, cap);
        ghi = G(hi);
    }
    return num::brent_root(G, 0.0, hi, g0, ghi, 1e-13);
}

double eval_N(double x, double m, const Model& model) {
    if (m < 0.0 || x < m) throw DomainError("eval_N: need 0 <= m <= x");
    return aux_N(make_aux_problem(model), x, m);
}

double solve_eta(double m, const Model& model, double xbar) {
    if (m < 0.0 || m >= xbar) throw DomainError("solve_eta: need 0 <= m < xbar");
    return aux_threshold(make_aux_problem(model), m, xbar + 1e-8 * xbar);
}

double solve_eta(double m, const Model& model) { return solve_eta(m, model, find_xbar(model)); }

double eval_aux_value(double x, double m, const Model& model, double xbar, double eta_m) {
    if (m < 0.0 || x < m) throw DomainError("eval_aux_value: need x >= m >= 0");
    if (m >= xbar) return x - m + model.downgraded.U(m);
    return aux_value(make_aux_problem(model), x, m, eta_m);
}

double resolve_x_max(const Model& model, double xbar, double x0) {
    if (model.x_max > 0.0) {
        if (!(model.x_max > xbar)) throw ParameterError("x_max must exceed xbar");
        return model.x_max;
    }
    return 2.0 * std::max({xbar, model.tipping.ybar, x0});
}

AuxiliarySolution::AuxiliarySolution(std::shared_ptr<const Model> model, double xbar, double x_max,
                                     std::vector<double> grid_m, std::vector<double> grid_eta,
                                     std::vector<double> slopes)
    : model_(std::move(model)),
      problem_(make_aux_problem(*model_)),
      xbar_(xbar),
      x_max_(x_max),
      grid_m_(std::move(grid_m)),
      grid_eta_(std::move(grid_eta)),
      interp_(grid_m_, grid_eta_, std::move(slopes)) {}

double AuxiliarySolution::eta(double m) const {
    if (m >= xbar_) return m;
    if (m <= 0.0) return grid_eta_.front();
    return interp_(m);
}

double AuxiliarySolution::eta_prime(double m) const {
    if (m >= xbar_) return 1.0;
    return interp_.derivative(std::max(m, 0.0));
}

double AuxiliarySolution::eta_exact(double m) const {
    if (m >= xbar_) return m;
    if (m == 0.0) return grid_eta_.front();
    return aux_threshold(problem_, m, xbar_ + 1e-8 * xbar_);
}

AuxCoefficients AuxiliarySolution::coefficients(double m) const {
    if (m < 0.0 || m >= xbar_) throw DomainError("coefficients: need 0 <= m < xbar");
    return aux_coefficients(problem_, m, eta_exact(m));
}

double AuxiliarySolution::value(double x, double m) const {
    if (m < 0.0 || x < m) throw DomainError("value: need x >= m >= 0");
    if (m >= xbar_) return x - m + model_->downgraded.U(m);
    return aux_value(problem_, x, m, eta_exact(m));
}

AuxiliarySolution tabulate_eta(std::shared_ptr<const Model> model, int n) {
    if (n < 64) throw ParameterError("tabulate_eta: n must be >= 64");
    const double xbar = find_xbar(*model);
    const AuxProblem p = make_aux_problem(*model);
    std::vector<double> ms(n), etas(n), slopes(n);
    const double pi = std::acos(-1.0);
    for (int k = 0; k < n; ++k) ms[k] = 0.5 * xbar * (1.0 - std::cos(pi * k / (n - 1)));
    ms.front() = 0.0;
    ms.back() = xbar;
    for (int k = 0; k + 1 < n; ++k) {
        etas[k] = aux_threshold(p, ms[k], xbar + 1e-8 * xbar);
        slopes[k] = -aux_N_m(p, etas[k], ms[k]) / aux_N_x(p, etas[k], ms[k]);
    }
    etas.back() = xbar;
    slopes.back() = -aux_N_m(p, xbar, xbar) / aux_N_x(p, xbar, xbar);
    for (int k = 1; k < n; ++k)
        if (!(etas[k] > etas[k - 1])) throw NumericalError("tabulate_eta: eta not strictly increasing");
    const double x_max = resolve_x_max(*model, xbar, etas.front());
    return AuxiliarySolution(std::move(model), xbar, x_max, std::move(ms), std::move(etas), std::move(slopes));
}

}  // namespace tipping
