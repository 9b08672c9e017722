#include "tipping/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tipping/error.hpp"

namespace tipping {

namespace {

struct Chain {
    double up, down, beta;
};

// Central probabilities when the drift is resolved, upwinded otherwise.
Chain chain_at(const DiffusionSpec& d, double x, double h, double* dt_out) {
    const double mu = d.mu(x);
    const double s = d.sigma(x);
    const double s2 = s * s;
    double up, down, dt;
    if (h * std::abs(mu) <= s2) {
        up = 0.5 * (s2 + h * mu) / s2;
        down = 0.5 * (s2 - h * mu) / s2;
        dt = h * h / s2;
    } else {
        const double q = s2 + h * std::abs(mu);
        up = (0.5 * s2 + h * std::max(mu, 0.0)) / q;
        down = (0.5 * s2 + h * std::max(-mu, 0.0)) / q;
        dt = h * h / q;
    }
    *dt_out = dt;
    return {up, down, 1.0 / (1.0 + d.r * dt)};
}

struct Lattice {
    int n;
    double h;
    std::vector<Chain> chain;
    std::vector<double> dt, F, drop;  // drop[j] = U(m_j - h)(F(m_j) - F(m_j - h))
};

Lattice build(const Model& model, double h, int n) {
    Lattice L{n, h, {}, {}, {}, {}};
    L.chain.resize(n + 1);
    L.dt.resize(n + 1);
    L.F.resize(n + 1);
    L.drop.assign(n + 1, 0.0);
    for (int i = 0; i <= n; ++i) {
        L.chain[i] = chain_at(model.diffusion, i * h, h, &L.dt[i]);
        L.F[i] = model.tipping.F(i * h);
    }
    for (int j = 1; j <= n; ++j) L.drop[j] = model.downgraded.U((j - 1) * h) * (L.F[j] - L.F[j - 1]);
    return L;
}

struct Choice {
    double wait, extract;
};

Choice evaluate(const Lattice& L, const std::vector<double>& V, int i, int j) {
    const double Fm = L.F[j];
    const double below = j < i ? V[OracleGrid::index(i - 1, j)] : L.drop[j] + V[OracleGrid::index(i - 1, i - 1)];
    const double extract = Fm * L.h + below;
    if (i == L.n) return {-kInf, extract};
    const Chain& c = L.chain[i];
    const double wait = c.beta * (c.up * V[OracleGrid::index(i + 1, j)] + c.down * below);
    return {wait, extract};
}

}  // namespace

double OracleGrid::diagonal(double x) const {
    if (x < 0.0 || x > n * h * (1.0 + 1e-12)) throw DomainError("OracleGrid::diagonal: x outside the lattice");
    const int k = std::min(static_cast<int>(x / h), n - 1);
    const double w = x / h - k;
    return (1.0 - w) * V(k, k) + w * V(k + 1, k + 1);
}

double OracleGrid::discrete_boundary(int j) const {
    int i = n;
    while (i - 1 >= j && action(i - 1, j) == Action::Extract) --i;
    return i * h;
}

OracleGrid solve_dp(const Model& model, double xbar, double h, double x_max, const OracleOptions& opt) {
    if (!(h > 0.0)) throw ParameterError("solve_dp: h must be > 0");
    if (h > opt.h_limit_fraction * xbar * (1.0 + 1e-12))
        throw ParameterError("solve_dp: h exceeds " + std::to_string(opt.h_limit_fraction) + " xbar");
    if (!(opt.tol >= 1e-10)) throw ParameterError("solve_dp: tol must be >= 1e-10");
    const int n = static_cast<int>(std::lround(x_max / h));
    if (n < 2) throw ParameterError("solve_dp: x_max / h must be >= 2");

    OracleGrid g;
    g.h = h;
    g.n = n;
    g.x_max = n * h;
    const Lattice L = build(model, h, n);
    g.dt_chain = L.dt;
    g.min_dt_chain = *std::min_element(L.dt.begin(), L.dt.end());

    const std::size_t size = OracleGrid::index(n, n) + 1;
    g.values.assign(size, 0.0);
    g.policy.assign(size, Action::Wait);
    g.policy[0] = Action::Absorb;

    double prev_change = 0.0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        double change = 0.0;
        for (int i = 1; i <= n; ++i) {
            for (int j = 0; j <= i; ++j) {
                const Choice c = evaluate(L, g.values, i, j);
                const double v = std::max(c.wait, c.extract);
                double& cur = g.values[OracleGrid::index(i, j)];
                if (v < cur - 1e-13 * (1.0 + std::abs(cur))) g.monotone_iterates = false;
                change = std::max(change, std::abs(v - cur));
                cur = v;
            }
        }
        if (it > 2 && prev_change > 0.0) g.max_contraction = std::max(g.max_contraction, change / prev_change);
        prev_change = change;
        g.iterations = it;
        g.residual = change;
        if (change < opt.tol) break;
    }
    if (g.residual >= opt.tol) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "solve_dp: no convergence after %d iterations (residual %.3g)", g.iterations,
                      g.residual);
        throw NumericalError(buf);
    }
    for (int i = 1; i <= n; ++i)
        for (int j = 0; j <= i; ++j) {
            const Choice c = evaluate(L, g.values, i, j);
            g.policy[OracleGrid::index(i, j)] = c.extract >= c.wait ? Action::Extract : Action::Wait;
        }
    return g;
}

BellmanCheck check_bellman(const Model& model, const OracleGrid& g) {
    const Lattice L = build(model, g.h, g.n);
    BellmanCheck r;
    r.min_value = g.V(0, 0);
    for (int i = 1; i <= g.n; ++i)
        for (int j = 0; j <= i; ++j) {
            const Choice c = evaluate(L, g.values, i, j);
            const double v = g.V(i, j);
            r.max_residual = std::max(r.max_residual, std::max(c.wait, c.extract) - v);
            r.min_value = std::min(r.min_value, v);
            if (j <= i - 1) {
                const double d = v - g.V(i - 1, j);
                if (d < 0.0) r.nondecreasing_in_x = false;
                r.min_gradient_excess = std::min(r.min_gradient_excess, d - L.F[j] * g.h);
            }
        }
    return r;
}

OracleComparison compare_with_surface(const OracleGrid& g, const ValueSurface& s) {
    OracleComparison c;
    for (int i = 0; i <= g.n; ++i)
        for (int j = 0; j <= i; ++j) {
            const double x = i * g.h, m = j * g.h;
            const double W = s.W(x, m);
            const double V = g.V(i, j);
            const double rel = std::abs(V - W) / (1.0 + std::abs(W));
            c.gap_map.push_back({x, m, V, W, rel});
            if (rel > c.max_rel_gap) {
                c.max_rel_gap = rel;
                c.worst_x = x;
                c.worst_m = m;
            }
        }

    const Boundary& b = s.boundary();
    const double m_hi = s.mbar() - 2.0 * g.h;
    std::vector<std::pair<double, double>> pts;
    for (int j = 1; j * g.h <= m_hi; ++j) {
        const double m = j * g.h;
        const double bd = g.discrete_boundary(j);
        pts.emplace_back(m, bd);
        c.max_boundary_gap = std::max(c.max_boundary_gap, std::abs(bd - b(m)));
    }
    if (pts.empty()) return c;
    const int nc = 2000;
    std::vector<std::pair<double, double>> curve;
    const double lo = pts.front().first, hi = pts.back().first;
    for (int k = 0; k <= nc; ++k) {
        const double m = lo + (hi - lo) * k / nc;
        curve.emplace_back(m, b(m));
    }
    auto dist = [](const auto& p, const auto& q) { return std::hypot(p.first - q.first, p.second - q.second); };
    double h1 = 0.0, h2 = 0.0;
    for (const auto& p : pts) {
        double d = kInf;
        for (const auto& q : curve) d = std::min(d, dist(p, q));
        h1 = std::max(h1, d);
    }
    for (const auto& q : curve) {
        double d = kInf;
        for (const auto& p : pts) d = std::min(d, dist(p, q));
        h2 = std::max(h2, d);
    }
    c.hausdorff = std::max(h1, h2);
    return c;
}

void write_oracle_csv(const OracleGrid& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "x,m,V,action\n";
    char buf[128];
    for (int i = 0; i <= g.n; ++i)
        for (int j = 0; j <= i; ++j) {
            const Action a = g.action(i, j);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%s\n", i * g.h, j * g.h, g.V(i, j),
                          a == Action::Extract ? "extract" : a == Action::Wait ? "wait" : "absorb");
            out << buf;
        }
}

}  // namespace tipping
