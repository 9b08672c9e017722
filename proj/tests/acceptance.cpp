// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            run all criteria
//   acceptance --only 4   run a single criterion

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "tipping/config.hpp"
#include "tipping/oracle.hpp"
#include "tipping/simulate.hpp"
#include "tipping/verifier.hpp"

using namespace tipping;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

RunConfig benchmark_cfg() { return parse_config("", {}); }

RunConfig linear_cfg() { return parse_config("[downgraded]\nkind = \"linear\"\n", {}); }

RunConfig twocases_cfg() {
    return parse_config(R"(
[diffusion]
mu = 4.0
sigma = 1.0
r = 0.4
[tipping]
kind = "twocases"
c = 0.05
eps = 0.01
xbar = "auto"
[downgraded]
mu_low = 1.2
)",
                        {});
}

PathConfig mc_config(long paths) {
    PathConfig c;
    c.n_paths = paths;
    c.dt = 1e-3;
    c.seed = 1;
    return c;
}

// 1. closed-form dividend barrier for U(x) = x
Outcome closed_form_anchor() {
    auto model = build_model(linear_cfg());
    const auto aux = tabulate_eta(model, 256);
    const double mu = 0.5, sigma = 1.0, r = 0.1;
    const double a = 0.5 * sigma * sigma;
    const double disc = std::sqrt(mu * mu + 4.0 * a * r);
    const double bp = (-mu + disc) / (2.0 * a), bm = (-mu - disc) / (2.0 * a);
    const double barrier = 2.0 / (bp - bm) * std::log(-bm / bp);
    const double err = std::abs(aux.x0() - barrier);
    return {err <= 1e-8, "x0 = " + fmt("%.12f", aux.x0()) + ", closed form " + fmt("%.12f", barrier) +
                             ", |diff| = " + fmt("%.2e", err)};
}

// 2. free-boundary structure on the benchmark
Outcome boundary_structure() {
    const Solved s = solve_pipeline(benchmark_cfg());
    const Boundary& b = *s.boundary;
    const AuxiliarySolution& aux = *s.aux;
    const double mbar = b.mbar();
    bool start = std::abs(b(0.0) - aux.x0()) <= 1e-12;
    bool nondecreasing = true;
    double worst_eta = -kInf;
    double prev = -kInf;
    const int n = 4000;
    for (int i = 0; i <= n; ++i) {
        const double m = mbar * i / n;
        const double v = b(m);
        if (v < prev) nondecreasing = false;
        prev = v;
        worst_eta = std::max(worst_eta, v - aux.eta_exact(m));
    }
    for (std::size_t i = 0; i < b.grid_m().size(); ++i)
        worst_eta = std::max(worst_eta, b.values()[i] - aux.eta_exact(b.grid_m()[i]));
    const double ybar = s.model->tipping.ybar;
    bool flat = true;
    if (ybar < mbar) {
        const double by = b(ybar);
        for (int i = 0; i <= 200; ++i) flat = flat && b(ybar + (mbar - ybar) * i / 200.0) == by;
        for (std::size_t i = 0; i < b.grid_m().size(); ++i)
            if (b.grid_m()[i] >= ybar) flat = flat && b.values()[i] == by;
    }
    const bool range = mbar > 0.0 && mbar < aux.xbar();
    const bool slope = b.b_prime_at_mbar() < 1.0 - 1e-6;
    const bool below = worst_eta <= 1e-8;
    std::ostringstream d;
    d << "b(0)=x0 " << (start ? "yes" : "no") << ", nondecreasing " << (nondecreasing ? "yes" : "no")
      << ", max(b-eta) = " << fmt("%.2e", worst_eta) << ", mbar = " << fmt("%.6f", mbar)
      << " in (0, " << fmt("%.6f", aux.xbar()) << "), b'(mbar) = " << fmt("%.6f", b.b_prime_at_mbar())
      << ", flat on [ybar, mbar] " << (flat ? "yes" : "no");
    return {start && nondecreasing && below && range && slope && flat, d.str()};
}

// 3. HJB certification on a 256 x 128 lattice
Outcome hjb_certification() {
    const Solved s = solve_pipeline(benchmark_cfg());
    HjbOptions opt;
    opt.tol_pde = 1e-5;
    const auto hjb = verify_hjb(*s.surface, 256, 128, opt);
    const auto diag = verify_neumann_and_T(*s.surface, 64);
    std::ostringstream d;
    d << "J1 |(L-r)W| max " << fmt("%.2e", hjb.max_abs_pde_j1) << ", J2/J3 (L-r)W max " << fmt("%.2e", hjb.max_pde_j23)
      << ", min slack J1 " << fmt("%.2e", hjb.min_slack_j1) << ", smooth fit " << fmt("%.1e", hjb.max_smooth_fit_x)
      << "/" << fmt("%.1e", hjb.max_smooth_fit_xx) << ", Neumann gap " << fmt("%.2e", diag.max_neumann_gap)
      << ", min T slack " << fmt("%.2e", diag.min_t_slack) << ", violations "
      << hjb.violations.size() + diag.violations.size();
    return {hjb.passed() && diag.passed(), d.str()};
}

// 4. Monte Carlo agreement at the three probes
Outcome mc_agreement() {
    const Solved s = solve_pipeline(benchmark_cfg());
    if (!(s.model->downgraded.u_star <= s.surface->mbar())) return {false, "benchmark is not in the u* <= mbar regime"};
    const Policy p = ReflectAtBoundary{s.boundary};
    const PathConfig cfg = mc_config(100000);
    bool ok = true;
    std::ostringstream d;
    for (const auto& [x, m] : mc_probe_points(*s.surface)) {
        const auto e = estimate_markov(*s.model, p, cfg, x, m);
        const double w = s.surface->W(x, m);
        const double tol = std::max(3.0 * e.std_error, 0.01 * std::abs(w));
        const bool hit = std::abs(e.mean - w) <= tol;
        ok = ok && hit;
        d << "(" << fmt("%.4f", x) << "," << fmt("%.4f", m) << "): " << fmt("%.5f", e.mean) << " +- "
          << fmt("%.5f", e.std_error) << " vs W " << fmt("%.5f", w) << (hit ? "; " : " MISS; ");
    }
    return {ok, d.str()};
}

// 5. raw objective = Markov reward + U(x)(1 - F(x)) with coupled seeds
Outcome tipping_identity() {
    const Solved s = solve_pipeline(benchmark_cfg());
    const Policy p = ReflectAtBoundary{s.boundary};
    const PathConfig cfg = mc_config(30000);
    const double ybar = s.model->tipping.ybar;
    bool ok = true;
    std::ostringstream d;
    for (double x : {0.5 * ybar, 0.5 * (ybar + s.surface->mbar()), 0.5 * (s.surface->mbar() + s.aux->x_max())}) {
        const auto raw = estimate_raw(*s.model, p, cfg, x);
        const auto mk = estimate_markov(*s.model, p, cfg, x, x);
        const double rhs = mk.mean + s.model->downgraded.U(x) * (1.0 - s.model->tipping.F(x));
        const double se = std::hypot(raw.std_error, mk.std_error);
        const bool hit = std::abs(raw.mean - rhs) <= 3.0 * se;
        ok = ok && hit;
        d << "x=" << fmt("%.3f", x) << ": raw " << fmt("%.5f", raw.mean) << " vs " << fmt("%.5f", rhs) << " (z "
          << fmt("%.2f", se > 0.0 ? (raw.mean - rhs) / se : 0.0) << ")" << (hit ? "; " : " MISS; ");
    }
    return {ok, d.str()};
}

// 6. epsilon sweep in the regime without an optimal control
Outcome epsilon_regime() {
    const Solved s = solve_pipeline(twocases_cfg());
    const double u = s.model->downgraded.u_star;
    const bool regime = u > s.surface->mbar();
    if (!regime) return {false, "regime flag: optimal-exists (u* <= mbar)"};
    const auto sw = run_epsilon_sweep(*s.surface, u, u, {0.2, 0.1, 0.05, 0.02}, mc_config(100000));
    std::ostringstream d;
    d << "regime epsilon-only (mbar " << fmt("%.4f", s.surface->mbar()) << " < u* " << fmt("%.4f", u) << "), W "
      << fmt("%.5f", sw.W) << "; gaps";
    for (const auto& r : sw.rows) d << " " << fmt("%+.4f", r.gap) << "(" << fmt("%.4f", r.std_error) << ")";
    d << "; improvement " << fmt("%.4f", sw.improvement) << " +- " << fmt("%.4f", sw.improvement_se)
      << "; gaps positive " << (sw.gaps_positive ? "yes" : "no") << ", decrease > 2 SE "
      << (sw.gap_shrinks ? "yes" : "no") << "; continuation-valued gaps";
    for (const auto& r : sw.rows) d << " " << fmt("%+.4f", sw.W - r.continuation_estimate);
    return {sw.gaps_positive && sw.gap_shrinks, d.str()};
}

// 7. brute-force dynamic programming on the lattice
Outcome dp_oracle() {
    const Solved s = solve_pipeline(benchmark_cfg());
    const double xm = s.aux->x_max();
    const double h = xm / 40.0;
    const auto g1 = solve_dp(*s.model, s.aux->xbar(), h, xm);
    const auto g2 = solve_dp(*s.model, s.aux->xbar(), h / 2.0, xm);
    const auto& U = s.model->downgraded.U;
    const auto& F = s.model->tipping.F;
    bool ok = true;
    std::ostringstream d;
    for (const auto& pr : mc_probe_points(*s.surface)) {
        const double x = pr.first;
        const double vb = s.surface->Vbar(x);
        const double e1 = std::abs(g1.diagonal(x) + U(x) * (1.0 - F(x)) - vb) / (1.0 + vb);
        const double e2 = std::abs(g2.diagonal(x) + U(x) * (1.0 - F(x)) - vb) / (1.0 + vb);
        const bool hit = e1 <= 0.05 && e2 < e1;
        ok = ok && hit;
        d << "x=" << fmt("%.3f", x) << ": " << fmt("%.4f", e1) << " -> " << fmt("%.4f", e2) << (hit ? "; " : " MISS; ");
    }
    const auto cmp = compare_with_surface(g1, *s.surface);
    const bool bnd = cmp.max_boundary_gap <= 2.0 * h;
    d << "boundary gap " << fmt("%.4f", cmp.max_boundary_gap) << " <= 2h = " << fmt("%.4f", 2.0 * h) << (bnd ? "" : " MISS");
    return {ok && bnd, d.str()};
}

// 8. auxiliary fixed-floor problem
Outcome auxiliary_suite() {
    const Solved s = solve_pipeline(benchmark_cfg());
    const AuxiliarySolution& a = *s.aux;
    const auto& U = s.model->downgraded.U;
    const double xb = a.xbar();
    double floor_err = 0.0, fit_err = 0.0, concav = -kInf, lump_err = 0.0;
    bool dominance = true;
    const int nm = 24;
    for (int j = 0; j < nm; ++j) {
        const double m = xb * j / nm;
        floor_err = std::max(floor_err, std::abs(a.value(m, m) - U(m)));
        const double e = a.eta_exact(m);
        const double hf = 1e-7;
        fit_err = std::max(fit_err, std::abs((a.value(e, m) - a.value(e - hf, m)) / hf - 1.0));
        const double hc = 1e-3 * (e - m);
        for (int i = 1; i < 50; ++i) {
            const double x = m + (e - m) * i / 50.0;
            concav = std::max(concav, a.value(x + hc, m) - 2.0 * a.value(x, m) + a.value(x - hc, m));
        }
    }
    for (double m : {xb, xb + 0.5, xb + 2.0})
        for (double dx : {0.0, 0.7, 3.0}) lump_err = std::max(lump_err, std::abs(a.value(m + dx, m) - (dx + U(m))));
    for (int i = 0; i < 12; ++i)
        for (int k = i + 1; k < 12; ++k) {
            const double m1 = xb * i / 12.0, m2 = xb * k / 12.0;
            for (double x : {m2, m2 + 0.3, m2 + 2.0}) dominance = dominance && a.value(x, m1) > a.value(x, m2);
        }
    std::ostringstream d;
    d << "|V(m)-U(m)| " << fmt("%.1e", floor_err) << ", |V_x(eta)-1| " << fmt("%.1e", fit_err)
      << ", max second difference " << fmt("%.1e", concav) << ", lump branch " << fmt("%.1e", lump_err)
      << ", dominance " << (dominance ? "yes" : "no");
    return {floor_err <= 1e-9 && fit_err <= 1e-6 && concav <= 1e-8 && lump_err <= 1e-9 && dominance, d.str()};
}

// 9. monotonicity of the boundary vector field
Outcome field_monotonicity() {
    bool ok = true;
    std::ostringstream d;
    for (auto [name, cfg] : {std::pair{"benchmark", benchmark_cfg()}, std::pair{"twocases", twocases_cfg()}}) {
        auto model = build_model(cfg);
        const auto aux = std::make_shared<const AuxiliarySolution>(tabulate_eta(model, 256));
        const auto rep = check_field_monotonicity(*aux, 64);
        ok = ok && rep.passed();
        d << name << ": diagonal " << (rep.diagonal_decreasing ? "ok" : "FAIL") << ", slices "
          << (rep.slices_decreasing ? "ok" : "FAIL") << "; ";
    }
    return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);

    const std::vector<Criterion> all = {
        {1, "closed-form anchor", 1.0, closed_form_anchor},
        {2, "free-boundary structure", 5.0, boundary_structure},
        {3, "HJB certification", 30.0, hjb_certification},
        {4, "Monte Carlo agreement", 120.0, mc_agreement},
        {5, "tipping identity", 120.0, tipping_identity},
        {6, "epsilon-only regime", 300.0, epsilon_regime},
        {7, "DP oracle equivalence", 180.0, dp_oracle},
        {8, "auxiliary problem", 5.0, auxiliary_suite},
        {9, "field monotonicity", 1.0, field_monotonicity},
    };
    int failed = 0;
    for (const auto& c : all) {
        if (only && c.id != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_s;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::printf("%s criterion %d (%s): %s [%.2fs / %.0fs budget%s]\n", pass ? "PASS" : "FAIL", c.id, c.title,
                    o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
