#include "tipping/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tipping/auxiliary.hpp"
#include "tipping/error.hpp"
#include "tipping/numerics.hpp"

namespace tipping {

DiffusionSpec make_abm_diffusion(double mu0, double sigma0, double r) {
    if (!(sigma0 > 0.0)) throw ParameterError("abm: sigma must be positive");
    if (!(r > 0.0)) throw ParameterError("abm: r must be positive");
    DiffusionSpec d;
    d.mu = [mu0](double) { return mu0; };
    d.sigma = [sigma0](double) { return sigma0; };
    d.mu_prime = [](double) { return 0.0; };
    d.mu_second = [](double) { return 0.0; };
    d.sigma_prime = [](double) { return 0.0; };
    d.r = r;
    d.kind = "abm";
    d.constant = ConstantCoefficients{mu0, sigma0};
    return d;
}

double TippingLaw::H(double m) const {
    const double Fm = F(m);
    if (Fm <= 0.0) return kInf;
    return f(m) / Fm;
}

double TippingLaw::inverse_cdf(double u) const {
    if (quantile) return quantile(u);
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return ybar;
    auto g = [&](double y) { return F(y) - u; };
    return num::brent_root(g, 0.0, ybar, -u, F(ybar) - u, 1e-14 * ybar);
}

TippingLaw make_uniform_tipping(double ybar) {
    if (!(ybar > 0.0)) throw ParameterError("uniform tipping: ybar must be positive");
    TippingLaw t;
    t.ybar = ybar;
    t.kind = "uniform";
    t.f = [ybar](double x) { return (x >= 0.0 && x <= ybar) ? 1.0 / ybar : 0.0; };
    t.F = [ybar](double x) { return x <= 0.0 ? 0.0 : (x >= ybar ? 1.0 : x / ybar); };
    t.quantile = [ybar](double u) { return std::clamp(u, 0.0, 1.0) * ybar; };
    return t;
}

// Piecewise density: d on [0, c - eps], linear ramp down to eps on [c - eps, c], eps on [c, xbar].
// d is fixed by unit mass: (c - eps) d + eps (d + eps) / 2 + eps (xbar - c) = 1.
TippingLaw make_twocases_tipping(double c, double eps, double xbar) {
    if (!(c > 0.0 && c < xbar)) throw ParameterError("twocases: need 0 < c < xbar");
    if (!(eps > 0.0 && eps < 2.0 * std::min(c, xbar - c)))
        throw ParameterError("twocases: need 0 < eps < 2 min(c, xbar - c)");
    const double d = (1.0 - eps * (xbar - c + 0.5 * eps)) / (c - 0.5 * eps);
    if (!(d > 0.0)) throw ParameterError("twocases: eps too large for a positive plateau");
    if (c - eps < 0.0) throw ParameterError("twocases: need eps <= c");
    const double a = c - eps;
    const double Fa = d * a;
    const double Fc = Fa + 0.5 * eps * (d + eps);
    TippingLaw t;
    t.ybar = xbar;
    t.kind = "twocases";
    t.f = [=](double x) {
        if (x < 0.0 || x > xbar) return 0.0;
        if (x <= a) return d;
        if (x <= c) return d + (eps - d) * (x - a) / eps;
        return eps;
    };
    t.F = [=](double x) {
        if (x <= 0.0) return 0.0;
        if (x <= a) return d * x;
        if (x <= c) {
            const double s = x - a;
            return Fa + d * s + 0.5 * (eps - d) * s * s / eps;
        }
        if (x >= xbar) return 1.0;
        return Fc + eps * (x - c);
    };
    return t;
}

TippingLaw make_table_tipping(std::vector<double> x, std::vector<double> f) {
    if (x.size() < 2 || x.size() != f.size()) throw ParameterError("table tipping: need >= 2 (x, f) pairs");
    if (x.front() != 0.0) throw ParameterError("table tipping: first abscissa must be 0");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) throw ParameterError("table tipping: abscissae must increase");
    for (double v : f)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("table tipping: density values must be >= 0");
    std::vector<double> cum(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i) cum[i] = cum[i - 1] + 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
    auto xs = std::make_shared<const std::vector<double>>(std::move(x));
    auto fs = std::make_shared<const std::vector<double>>(std::move(f));
    auto cs = std::make_shared<const std::vector<double>>(std::move(cum));
    TippingLaw t;
    t.ybar = xs->back();
    t.kind = "table";
    auto cell = [xs](double v) {
        auto it = std::upper_bound(xs->begin(), xs->end(), v);
        std::size_t i = static_cast<std::size_t>(it - xs->begin());
        return std::min<std::size_t>(i == 0 ? 0 : i - 1, xs->size() - 2);
    };
    t.f = [xs, fs, cell](double v) {
        if (v < 0.0 || v > xs->back()) return 0.0;
        const std::size_t i = cell(v);
        const double w = (v - (*xs)[i]) / ((*xs)[i + 1] - (*xs)[i]);
        return (*fs)[i] + w * ((*fs)[i + 1] - (*fs)[i]);
    };
    t.F = [xs, fs, cs, cell](double v) {
        if (v <= 0.0) return 0.0;
        if (v >= xs->back()) return cs->back();
        const std::size_t i = cell(v);
        const double h = (*xs)[i + 1] - (*xs)[i];
        const double s = v - (*xs)[i];
        const double slope = ((*fs)[i + 1] - (*fs)[i]) / h;
        return (*cs)[i] + (*fs)[i] * s + 0.5 * slope * s * s;
    };
    return t;
}

TippingLaw load_tipping_table(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw ParameterError("table tipping: cannot open " + csv_path);
    std::vector<double> xs, fs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double a, b;
        if (!(ls >> a >> b)) continue;  // header or malformed row
        xs.push_back(a);
        fs.push_back(b);
    }
    return make_table_tipping(std::move(xs), std::move(fs));
}

DowngradedValue make_linear_downgraded() {
    DowngradedValue u;
    u.U = [](double x) { return x; };
    u.U_prime = [](double) { return 1.0; };
    u.U_second = [](double) { return 0.0; };
    u.u_star = 0.0;
    u.kind = "linear";
    return u;
}

AbmRoots abm_roots(double mu0, double sigma0, double r) {
    const double a = 0.5 * sigma0 * sigma0;
    const double disc = std::sqrt(mu0 * mu0 + 4.0 * a * r);
    return {(-mu0 + disc) / (2.0 * a), (-mu0 - disc) / (2.0 * a)};
}

FundamentalPair make_abm_fundamentals(double mu0, double sigma0, double r) {
    if (!(sigma0 > 0.0)) throw ParameterError("abm fundamentals: sigma must be positive");
    if (!(r > 0.0)) throw ParameterError("abm fundamentals: r must be positive");
    const auto [bp, bm] = abm_roots(mu0, sigma0, r);
    FundamentalPair fp;
    fp.psi = [bp](double x) { return std::exp(bp * x); };
    fp.psi_p = [bp](double x) { return bp * std::exp(bp * x); };
    fp.psi_pp = [bp](double x) { return bp * bp * std::exp(bp * x); };
    fp.phi = [bm](double x) { return std::exp(bm * x); };
    fp.phi_p = [bm](double x) { return bm * std::exp(bm * x); };
    fp.phi_pp = [bm](double x) { return bm * bm * std::exp(bm * x); };
    fp.provider = "analytic-ABM";
    return fp;
}

// Value of extracting from an ABM with drift mu_low that pays C when it reaches 0:
// the fixed-floor problem at m = 0 with terminal payoff C.
DowngradedValue make_downgraded_abm(double mu_low, double sigma0, double r, double terminal) {
    if (!(mu_low > 0.0)) throw ParameterError("downgraded abm: mu_low must be positive");
    if (!(sigma0 > 0.0)) throw ParameterError("downgraded abm: sigma must be positive");
    if (!(r > 0.0)) throw ParameterError("downgraded abm: r must be positive");
    if (!(terminal >= 0.0)) throw ParameterError("downgraded abm: terminal payoff must be >= 0");
    DowngradedValue u;
    u.kind = "abm";
    if (terminal >= mu_low / r) {
        // Floor already above the threshold: immediate lump sum.
        u.U = [terminal](double x) { return x + terminal; };
        u.U_prime = [](double) { return 1.0; };
        u.U_second = [](double) { return 0.0; };
        u.u_star = 0.0;
        u.warning = "terminal payoff >= mu_low / r; downgraded problem degenerates to a lump sum";
        return u;
    }
    const DiffusionSpec diff = make_abm_diffusion(mu_low, sigma0, r);
    const FundamentalPair fp = make_abm_fundamentals(mu_low, sigma0, r);
    const AuxProblem p{diff, fp, [terminal](double) { return terminal; }, [](double) { return 0.0; }};
    double ustar;
    if (terminal == 0.0) {
        const auto [bp, bm] = abm_roots(mu_low, sigma0, r);
        ustar = 2.0 / (bp - bm) * std::log(-bm / bp);
    } else {
        double hi = 1.0;
        while (aux_N(p, hi, 0.0) >= 0.0) {
            hi *= 2.0;
            if (hi > 1e6) throw RangeError("downgraded abm: threshold bracket not found", 0.0, hi, 0.0, 0.0);
        }
        ustar = aux_threshold(p, 0.0, hi);
    }
    const auto [A, B] = aux_coefficients(p, 0.0, ustar);
    const auto [bp, bm] = abm_roots(mu_low, sigma0, r);
    const double level = mu_low / r;
    u.u_star = ustar;
    u.U = [=](double x) { return x <= ustar ? A * std::exp(bp * x) + B * std::exp(bm * x) : x - ustar + level; };
    u.U_prime = [=](double x) {
        return x <= ustar ? A * bp * std::exp(bp * x) + B * bm * std::exp(bm * x) : 1.0;
    };
    u.U_second = [=](double x) {
        return x <= ustar ? A * bp * bp * std::exp(bp * x) + B * bm * bm * std::exp(bm * x) : 0.0;
    };
    return u;
}

bool ValidationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

// violation(x) <= 0 passes. The worst (largest) violation is recorded, or the first non-finite point.
template <class V>
CheckResult sampled(const std::string& name, const std::vector<double>& grid, V&& violation) {
    CheckResult c;
    c.name = name;
    c.worst_value = -kInf;
    for (double x : grid) {
        double v;
        try {
            v = violation(x);
        } catch (const std::exception& e) {
            c.passed = false;
            c.worst_x = x;
            c.worst_value = std::nan("");
            c.detail = std::string("evaluation threw: ") + e.what();
            return c;
        }
        if (!std::isfinite(v)) {
            c.passed = false;
            c.worst_x = x;
            c.worst_value = v;
            c.detail = "non-finite evaluation";
            return c;
        }
        if (v > c.worst_value) {
            c.worst_value = v;
            c.worst_x = x;
        }
    }
    if (grid.empty()) c.worst_value = 0.0;
    c.passed = c.worst_value <= 0.0;
    if (!c.passed) c.detail = "violation";
    return c;
}

CheckResult strict(CheckResult c) {
    if (c.passed && c.worst_value >= 0.0) {
        c.passed = false;
        c.detail = "strict inequality violated";
    }
    return c;
}

double fd1(const Fn& g, double x, double h) { return (g(x + h) - g(x - h)) / (2.0 * h); }

}  // namespace

ValidationReport validate_model(const Model& model, int grid_n) {
    if (grid_n < 16) throw ParameterError("validate_model: grid_n must be >= 16");
    if (!(model.x_max > 0.0)) throw ParameterError("validate_model: x_max must be positive");
    const auto& d = model.diffusion;
    const auto& t = model.tipping;
    const auto& u = model.downgraded;
    const auto& fp = model.fundamentals;
    const double xm = model.x_max;
    const double r = d.r;
    ValidationReport rep;
    auto add = [&](CheckResult c) { rep.checks.push_back(std::move(c)); };

    const auto xs = linspace(0.0, xm, grid_n);
    const auto xs_inner = linspace(1e-3 * xm, xm, grid_n);

    // diffusion
    add(strict(sampled("sigma_positive", xs, [&](double x) { return -d.sigma(x); })));
    add(strict(sampled("mu_prime_below_r", xs, [&](double x) { return d.mu_prime(x) - r; })));
    add(sampled("mu_concave", xs, [&](double x) { return d.mu_second(x) - 1e-12; }));
    auto deriv_check = [&](const std::string& name, const Fn& g, const Fn& gp) {
        return sampled(name, xs_inner, [&](double x) {
            const double h = 1e-5 * std::max(1.0, std::fabs(x));
            return std::fabs(gp(x) - fd1(g, x, h)) / (1.0 + std::fabs(gp(x))) - 1e-5;
        });
    };
    add(deriv_check("mu_prime_consistent", d.mu, d.mu_prime));
    add(deriv_check("mu_second_consistent", d.mu_prime, d.mu_second));
    add(deriv_check("sigma_prime_consistent", d.sigma, d.sigma_prime));

    // tipping law
    const double yb = t.ybar;
    const auto ys = linspace(0.0, yb, grid_n);
    add(strict(sampled("density_positive_on_support", ys, [&](double x) { return -t.f(x); })));
    {
        const double hi = std::max(xm, 2.0 * yb);
        auto beyond = linspace(yb, hi, grid_n);
        beyond.erase(beyond.begin());
        add(sampled("density_zero_beyond_support", beyond, [&](double x) { return std::fabs(t.f(x)); }));
    }
    add(sampled("cdf_endpoints", std::vector<double>{0.0, yb}, [&](double x) {
        return x == 0.0 ? std::fabs(t.F(0.0)) - 1e-12 : std::fabs(t.F(yb) - 1.0) - 1e-10;
    }));
    {
        double prev = t.F(0.0);
        add(sampled("cdf_nondecreasing", ys, [&](double x) {
            const double v = t.F(x);
            const double viol = prev - v;
            prev = v;
            return viol;
        }));
    }
    {
        double acc = 0.0, left = 0.0;
        add(sampled("cdf_matches_density_integral", ys, [&](double x) {
            acc += num::adaptive_simpson(t.f, left, x, 1e-12);
            left = x;
            return std::fabs(acc - t.F(x)) - 1e-8;
        }));
    }
    {
        std::vector<double> lg(grid_n);
        for (int i = 0; i < grid_n; ++i) lg[i] = yb * std::pow(10.0, -6.0 * (grid_n - 1 - i) / (grid_n - 1));
        double prev = kInf;
        add(sampled("hazard_nonincreasing", lg, [&](double x) {
            const double h = t.H(x);
            const double viol = prev == kInf ? -1.0 : h - prev - 1e-12 * std::fabs(prev);
            prev = h;
            return viol;
        }));
    }

    // downgraded value
    add(sampled("U_nondecreasing", xs, [&](double x) { return -u.U_prime(x) - 1e-12; }));
    add(sampled("U_concave", xs, [&](double x) { return u.U_second(x) - 1e-10; }));
    {
        std::vector<double> below, above;
        for (double x : xs) (x <= u.u_star ? below : above).push_back(x);
        below.push_back(u.u_star);
        add(sampled("U_prime_at_least_one_below_ustar", below,
                    [&](double x) { return 1.0 - u.U_prime(x) - 1e-8; }));
        above.insert(above.begin(), u.u_star);
        add(sampled("U_prime_one_above_ustar", above, [&](double x) { return std::fabs(u.U_prime(x) - 1.0) - 1e-8; }));
        add(sampled("U_smooth_fit_at_ustar", std::vector<double>{u.u_star},
                    [&](double x) { return std::fabs(u.U_prime(x) - 1.0) - 1e-8; }));
        std::vector<double> gen;
        if (u.u_star > 0.0)
            for (int i = 0; i < grid_n; ++i) gen.push_back(u.u_star * i / grid_n);
        add(sampled("U_generator_positive_below_ustar", gen, [&](double x) {
            const double s = d.sigma(x);
            return -(d.mu(x) * u.U_prime(x) + 0.5 * s * s * u.U_second(x) - r * u.U(x));
        }));
    }
    add(deriv_check("U_prime_consistent", u.U, u.U_prime));
    {
        // skip the kink of U'' at u*
        std::vector<double> g;
        for (double x : xs_inner)
            if (std::fabs(x - u.u_star) > 1e-4 * xm) g.push_back(x);
        add(sampled("U_second_consistent", g, [&](double x) {
            const double h = 1e-5 * std::max(1.0, std::fabs(x));
            return std::fabs(u.U_second(x) - fd1(u.U_prime, x, h)) / (1.0 + std::fabs(u.U_second(x))) - 1e-5;
        }));
    }

    // fundamental pair
    auto ode_residual = [&](const Fn& g, const Fn& gp, const Fn& gpp) {
        return [&, g, gp, gpp](double x) {
            const double s = d.sigma(x);
            const double upp = gpp(x);
            const double rhs = 2.0 / (s * s) * (r * g(x) - d.mu(x) * gp(x));
            return std::fabs(upp - rhs) - 1e-8 * (1.0 + std::fabs(upp));
        };
    };
    add(sampled("psi_ode_residual", xs, ode_residual(fp.psi, fp.psi_p, fp.psi_pp)));
    add(sampled("phi_ode_residual", xs, ode_residual(fp.phi, fp.phi_p, fp.phi_pp)));
    add(strict(sampled("wronskian_positive", xs, [&](double x) { return -fp.D(x); })));
    {
        const auto g = linspace(0.01, xm, 512);
        add(sampled("wronskian_decay", g, [&](double x) {
            const double h = 1e-5;
            const double Dp = (fp.D(x + h) - fp.D(x - h)) / (2.0 * h);
            const double s = d.sigma(x);
            const double Dx = fp.D(x);
            return std::fabs(Dp + 2.0 * d.mu(x) / (s * s) * Dx) - 1e-6 * std::fabs(Dx);
        }));
    }
    {
        double prev_psi = -kInf, prev_phi = kInf;
        add(sampled("psi_increasing", xs, [&](double x) {
            const double v = fp.psi(x);
            const double viol = prev_psi - v;
            prev_psi = v;
            return x == xs.front() ? -v : viol;
        }));
        add(sampled("phi_decreasing", xs, [&](double x) {
            const double v = fp.phi(x);
            const double viol = v - prev_phi;
            prev_phi = v;
            return x == xs.front() ? -v : viol;
        }));
    }

    // cross-field
    add(strict(sampled("mu0_above_rU0", std::vector<double>{0.0}, [&](double) { return r * u.U(0.0) - d.mu(0.0); })));
    return rep;
}

}  // namespace tipping
