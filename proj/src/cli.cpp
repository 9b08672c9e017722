#include "tipping/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "tipping/config.hpp"
#include "tipping/error.hpp"
#include "tipping/io.hpp"
#include "tipping/oracle.hpp"
#include "tipping/simulate.hpp"
#include "tipping/verifier.hpp"

namespace tipping {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Context {
    RunSpec spec;
    RunConfig cfg;
    std::ostream& log;
};

std::string out_path(const Context& c, const std::string& name) { return (fs::path(c.spec.output_dir) / name).string(); }

void prepare_output(const Context& c) {
    std::error_code ec;
    fs::create_directories(c.spec.output_dir, ec);
    if (ec || !fs::is_directory(c.spec.output_dir))
        throw ConfigError("output directory " + c.spec.output_dir + " is not writable");
    const auto probe = fs::path(c.spec.output_dir) / ".write_test";
    {
        std::ofstream t(probe);
        if (!t) throw ConfigError("output directory " + c.spec.output_dir + " is not writable");
    }
    fs::remove(probe, ec);
}

void write_json(const std::string& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

ordered_json header(const std::string& command) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    return j;
}

ordered_json config_json(const RunConfig& c) {
    ordered_json j;
    j["diffusion"] = {{"kind", c.diffusion.kind}, {"mu", c.diffusion.mu}, {"sigma", c.diffusion.sigma}, {"r", c.diffusion.r}};
    ordered_json t = {{"kind", c.tipping.kind}};
    if (c.tipping.kind == "uniform") t["ybar"] = c.tipping.ybar;
    if (c.tipping.kind == "twocases") {
        t["c"] = c.tipping.c;
        t["eps"] = c.tipping.eps;
        t["xbar"] = c.tipping.xbar ? ordered_json(*c.tipping.xbar) : ordered_json("auto");
    }
    if (c.tipping.kind == "table") t["table"] = c.tipping.table;
    j["tipping"] = t;
    ordered_json d = {{"kind", c.downgraded.kind}};
    if (c.downgraded.kind == "abm") {
        d["mu_low"] = c.downgraded.mu_low;
        d["terminal"] = c.downgraded.terminal;
    }
    j["downgraded"] = d;
    j["grid"] = {{"x_max", c.grid.x_max}, {"n", c.grid.n}};
    j["boundary"] = {{"rel_tol", c.boundary.rel_tol}, {"abs_tol", c.boundary.abs_tol}, {"start", c.boundary.start}};
    return j;
}

const char* regime(const Solved& s) {
    return s.model->downgraded.u_star <= s.surface->mbar() ? "optimal-exists" : "epsilon-only";
}

ordered_json solution_json(const Solved& s) {
    const Boundary& b = *s.boundary;
    ordered_json j;
    j["xbar"] = s.aux->xbar();
    j["x0"] = b.x0();
    j["mbar"] = b.mbar();
    j["u_star"] = s.model->downgraded.u_star;
    j["ybar"] = s.model->tipping.ybar;
    j["b_prime_mbar"] = b.b_prime_at_mbar();
    j["regime"] = regime(s);
    j["x_max"] = s.aux->x_max();
    j["flat_from"] = b.flat_from();
    j["start_scheme"] = b.scheme() == StartScheme::Sequence ? "sequence" : "slope";
    j["start_slope"] = b.start_slope();
    j["ode_steps"] = b.stats().accepted;
    return j;
}

std::vector<std::string> model_warnings(const Solved& s) {
    std::vector<std::string> w;
    if (!s.model->downgraded.warning.empty()) w.push_back(s.model->downgraded.warning);
    return w;
}

// --- validate -------------------------------------------------------------

int cmd_validate(Context& c) {
    auto model = build_model(c.cfg);
    if (model->x_max <= 0.0) {
        const double xb = find_xbar(*model);
        model->x_max = resolve_x_max(*model, xb, solve_eta(0.0, *model, xb));
    }
    const ValidationReport rep = validate_model(*model, 256);
    prepare_output(c);
    CsvWriter w(out_path(c, "validation.csv"), {"check", "passed", "worst_x", "worst_value", "detail"});
    ordered_json j = header("validate");
    j["config"] = config_json(c.cfg);
    ordered_json failed = ordered_json::array();
    for (const auto& ch : rep.checks) {
        w.row({ch.name, ch.passed ? "true" : "false", fmt17(ch.worst_x), fmt17(ch.worst_value), ch.detail});
        if (!ch.passed) failed.push_back(ch.name);
    }
    j["passed"] = rep.passed();
    j["failed_checks"] = failed;
    j["warnings"] = model->downgraded.warning.empty() ? ordered_json::array() : ordered_json::array({model->downgraded.warning});
    write_json(out_path(c, "validate.json"), j);
    c.log << "validate: " << rep.checks.size() << " checks, " << failed.size() << " failed\n";
    return rep.passed() ? kExitOk : kExitVerifyFailed;
}

// --- solve ------------------------------------------------------------------

void write_solution(const Context& c, const Solved& s) {
    const AuxiliarySolution& aux = *s.aux;
    {
        CsvWriter w(out_path(c, "eta.csv"), {"m", "eta"});
        const auto& gm = aux.grid_m();
        const auto& ge = aux.grid_eta();
        for (std::size_t i = 0; i < gm.size(); ++i) w.row({fmt17(gm[i]), fmt17(ge[i])});
    }
    {
        CsvWriter w(out_path(c, "boundary.csv"), {"m", "b", "eta", "E"});
        const auto& gm = s.boundary->grid_m();
        const auto& gb = s.boundary->values();
        for (std::size_t i = 0; i < gm.size(); ++i) {
            const double m = gm[i];
            const double E = m > 0.0 ? eval_E(gb[i], m, aux) : s.boundary->start_slope();
            w.row({fmt17(m), fmt17(gb[i]), fmt17(aux.eta(m)), fmt17(E)});
        }
    }
    {
        CsvWriter w(out_path(c, "surface.csv"), {"x", "m", "region", "W"});
        const int nx = c.cfg.verify.nx, nm = c.cfg.verify.nm;
        const double xm = aux.x_max(), xb = aux.xbar();
        for (int j = 0; j < nm; ++j) {
            const double m = xb * j / (nm - 1);
            for (int i = 0; i < nx; ++i) {
                const double x = xm * i / (nx - 1);
                if (x < m) continue;
                const Region r = s.surface->classify(x, m);
                w.row({fmt17(x), fmt17(m), region_name(r), fmt17(s.surface->W_branch(x, m, r))});
            }
        }
    }
    ordered_json j = header("solve");
    j["config"] = config_json(c.cfg);
    j["solution"] = solution_json(s);
    j["warnings"] = model_warnings(s);
    write_json(out_path(c, "summary.json"), j);
}

int cmd_solve(Context& c) {
    const Solved s = solve_pipeline(c.cfg);
    prepare_output(c);
    write_solution(c, s);
    c.log << "solve: xbar=" << s.aux->xbar() << " x0=" << s.boundary->x0() << " mbar=" << s.boundary->mbar()
          << " regime=" << regime(s) << "\n";
    return kExitOk;
}

// --- verify -----------------------------------------------------------------

int cmd_verify(Context& c) {
    const Solved s = solve_pipeline(c.cfg);
    const auto& vc = c.cfg.verify;
    const ValueSurface surface(s.boundary, vc.perturb);
    HjbOptions opt;
    opt.tol_pde = vc.tol_pde;
    opt.tol_slack = vc.tol_slack;
    opt.stencil_h = vc.stencil_h;
    const HjbReport hjb = verify_hjb(surface, vc.nx, vc.nm, opt);
    const DiagonalReport diag = verify_neumann_and_T(surface, vc.diagonal_n);
    const LMonotoneReport lm = verify_l_monotone(surface, vc.diagonal_n);

    prepare_output(c);
    write_solution(c, s);
    {
        CsvWriter w(out_path(c, "residuals.csv"), {"x", "m", "region", "W", "pde_residual", "gradient_slack"});
        for (const auto& p : hjb.points)
            w.row({fmt17(p.x), fmt17(p.m), region_name(p.region), fmt17(p.W), fmt17(p.pde_residual),
                   fmt17(p.gradient_slack)});
    }
    {
        CsvWriter w(out_path(c, "diagonal.csv"), {"m", "W_m", "Uf", "t_slack"});
        for (const auto& p : diag.points) w.row({fmt17(p.m), fmt17(p.W_m), fmt17(p.Uf), fmt17(p.t_slack)});
    }
    std::vector<Violation> all = hjb.violations;
    all.insert(all.end(), diag.violations.begin(), diag.violations.end());
    all.insert(all.end(), lm.violations.begin(), lm.violations.end());
    {
        CsvWriter w(out_path(c, "violations.csv"), {"check", "x", "m", "value", "tol"});
        for (const auto& v : all) w.row({v.check, fmt17(v.x), fmt17(v.m), fmt17(v.value), fmt17(v.tol)});
    }
    const bool ok = all.empty();
    ordered_json j = header("verify");
    j["config"] = config_json(c.cfg);
    j["perturb"] = vc.perturb;
    j["lattice"] = {{"nx", vc.nx}, {"nm", vc.nm}};
    j["tol_pde"] = vc.tol_pde;
    j["stencil_h"] = vc.stencil_h > 0.0 ? vc.stencil_h : default_stencil(surface);
    j["hjb"] = {{"passed", hjb.passed()},
                {"max_abs_pde_j1", hjb.max_abs_pde_j1},
                {"max_pde_j23", hjb.max_pde_j23},
                {"min_slack_j1", hjb.min_slack_j1},
                {"max_abs_slack_j23", hjb.max_abs_slack_j23},
                {"max_seam_jump", hjb.max_seam_jump},
                {"max_smooth_fit_x", hjb.max_smooth_fit_x},
                {"max_smooth_fit_xx", hjb.max_smooth_fit_xx},
                {"points", {{"J1", hjb.counts[0]}, {"J2", hjb.counts[1]}, {"J3", hjb.counts[2]}}}};
    j["diagonal"] = {{"passed", diag.passed()},
                     {"max_neumann_gap", diag.max_neumann_gap},
                     {"min_neumann_excess", diag.min_neumann_excess},
                     {"min_t_slack", diag.min_t_slack},
                     {"mbar_left", diag.mbar_left},
                     {"mbar_right", diag.mbar_right}};
    j["l_monotone"] = {{"passed", lm.passed()}, {"max_l_prime", lm.max_l_prime}, {"max_l", lm.max_l}};
    ordered_json checks = ordered_json::object();
    for (const auto& v : all) checks[v.check] = checks.value(v.check, 0) + 1;
    j["violations"] = checks;
    j["passed"] = ok;
    if (!ok) {
        const auto& v = all.front();
        j["first_violation"] = {{"check", v.check}, {"x", v.x}, {"m", v.m}, {"value", v.value}, {"tol", v.tol},
                                {"ratio", v.tol != 0.0 ? std::abs(v.value) / std::abs(v.tol) : 0.0}};
    }
    write_json(out_path(c, "verify.json"), j);
    c.log << "verify: " << (ok ? "pass" : "FAIL") << " (" << all.size() << " violations)\n";
    if (!ok) {
        for (const auto& [k, v] : checks.items()) c.log << "  " << k << ": " << v << "\n";
        const auto& f = j["first_violation"];
        c.log << "  first: " << f["check"].get<std::string>() << " at (" << f["x"].get<double>() << ", "
              << f["m"].get<double>() << ") value " << f["value"].get<double>() << " vs tol " << f["tol"].get<double>()
              << " (x" << f["ratio"].get<double>() << ")\n";
    }
    return ok ? kExitOk : kExitVerifyFailed;
}

// --- simulate ---------------------------------------------------------------

PathConfig path_config(const SimulateConfig& s) {
    PathConfig pc;
    pc.dt = s.dt;
    pc.t_max = s.t_max;
    pc.seed = static_cast<std::uint64_t>(s.seed);
    pc.n_paths = s.paths;
    pc.antithetic = s.antithetic;
    return pc;
}

Policy make_policy(const SimulateConfig& s, const Solved& sol) {
    if (s.policy == "reflect-level") return ReflectAtLevel{s.level};
    if (s.policy == "lump-sum") return LumpSumTo{s.level};
    return ReflectAtBoundary{sol.boundary};
}

int cmd_simulate(Context& c) {
    const Solved s = solve_pipeline(c.cfg);
    const auto& sc = c.cfg.simulate;
    const PathConfig pc = path_config(sc);
    const Policy policy = make_policy(sc, s);
    const Model& model = *s.model;

    std::vector<std::pair<double, double>> probes;
    if (sc.x0) {
        const double m0 = sc.m0 ? *sc.m0 : *sc.x0;
        probes.emplace_back(*sc.x0, m0);
    } else {
        probes = mc_probe_points(*s.surface);
    }

    struct Row {
        std::string kind;
        double x, m;
        Estimate e;
        double reference;
    };
    std::vector<Row> rows;
    for (const auto& [x, m] : probes) {
        if (m < 0.0 || x < m) throw ParameterError("simulate: need x0 >= m0 >= 0");
        Estimate em = estimate_markov(model, policy, pc, x, m);
        rows.push_back({"markov", x, m, em, s.surface->W(x, m)});
        if (x == m) {
            Estimate er = estimate_raw(model, policy, pc, x);
            rows.push_back({"raw", x, x, er, s.surface->Vbar(x)});
        }
    }

    prepare_output(c);
    ordered_json j = header("simulate");
    j["config"] = config_json(c.cfg);
    j["policy"] = sc.policy;
    j["paths"] = sc.paths;
    j["dt"] = sc.dt;
    j["seed"] = sc.seed;
    j["t_max"] = resolve_t_max(pc, model.diffusion.r);
    ordered_json warnings = ordered_json::array();
    {
        CsvWriter w(out_path(c, "mc.csv"), {"policy", "kind", "x", "m", "estimate", "std_error", "reference", "n_paths",
                                            "truncated_fraction", "hit_zero_fraction"});
        CsvWriter wb(out_path(c, "mc_batches.csv"), {"probe", "kind", "batch", "paths", "mean", "std_error"});
        int probe = 0;
        ordered_json arr = ordered_json::array();
        for (const auto& r : rows) {
            w.row({sc.policy, r.kind, fmt17(r.x), fmt17(r.m), fmt17(r.e.mean), fmt17(r.e.std_error), fmt17(r.reference),
                   std::to_string(r.e.n_paths), fmt17(r.e.truncated_fraction), fmt17(r.e.hit_zero_fraction)});
            for (std::size_t b = 0; b < r.e.batches.size(); ++b) {
                const auto& be = r.e.batches[b];
                wb.row({std::to_string(probe), r.kind, std::to_string(b), std::to_string(be.paths), fmt17(be.mean),
                        fmt17(be.std_error)});
            }
            for (const auto& msg : r.e.warnings) warnings.push_back(r.kind + " (" + fmt17(r.x) + ", " + fmt17(r.m) + "): " + msg);
            arr.push_back({{"kind", r.kind}, {"x", r.x}, {"m", r.m}, {"estimate", r.e.mean}, {"std_error", r.e.std_error},
                           {"reference", r.reference}, {"truncated_fraction", r.e.truncated_fraction}});
            if (r.kind == "markov") ++probe;
        }
        j["estimates"] = arr;
    }
    // Markov/raw identity where both are available
    ordered_json ident = ordered_json::array();
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        if (rows[i].kind != "markov" || rows[i + 1].kind != "raw") continue;
        const double x = rows[i].x;
        const double lhs = rows[i + 1].e.mean;
        const double rhs = rows[i].e.mean + model.downgraded.U(x) * (1.0 - model.tipping.F(x));
        const double se = std::hypot(rows[i].e.std_error, rows[i + 1].e.std_error);
        ident.push_back({{"x", x}, {"raw", lhs}, {"markov_plus_tip", rhs}, {"combined_se", se},
                         {"z", se > 0.0 ? (lhs - rhs) / se : 0.0}});
    }
    j["identity"] = ident;
    j["warnings"] = warnings;
    write_json(out_path(c, "simulate.json"), j);
    for (const auto& r : rows)
        c.log << "simulate " << r.kind << " (" << r.x << ", " << r.m << "): " << r.e.mean << " +- " << r.e.std_error
              << " (reference " << r.reference << ")\n";
    return kExitOk;
}

// --- oracle -----------------------------------------------------------------

int cmd_oracle(Context& c) {
    const Solved s = solve_pipeline(c.cfg);
    const auto& oc = c.cfg.oracle;
    const double x_max = oc.x_max > 0.0 ? oc.x_max : s.aux->x_max();
    const double h = oc.h > 0.0 ? oc.h : x_max / oc.n;
    OracleOptions opt;
    opt.tol = oc.tol;
    opt.max_iter = oc.max_iter;
    const OracleGrid g = solve_dp(*s.model, s.aux->xbar(), h, x_max, opt);
    const OracleComparison cmp = compare_with_surface(g, *s.surface);
    const BellmanCheck bc = check_bellman(*s.model, g);

    prepare_output(c);
    write_oracle_csv(g, out_path(c, "oracle.csv"));
    {
        CsvWriter w(out_path(c, "oracle_gap.csv"), {"x", "m", "V_hat", "W", "rel_gap"});
        for (const auto& p : cmp.gap_map) w.row({fmt17(p.x), fmt17(p.m), fmt17(p.V), fmt17(p.W), fmt17(p.rel_gap)});
    }
    {
        CsvWriter w(out_path(c, "oracle_boundary.csv"), {"m", "b_hat", "b"});
        for (int jj = 1; jj * g.h <= s.surface->mbar(); ++jj)
            w.row({fmt17(jj * g.h), fmt17(g.discrete_boundary(jj)), fmt17(s.boundary->operator()(jj * g.h))});
    }
    ordered_json j = header("oracle");
    j["config"] = config_json(c.cfg);
    j["h"] = g.h;
    j["x_max"] = g.x_max;
    j["iterations"] = g.iterations;
    j["residual"] = g.residual;
    j["min_dt_chain"] = g.min_dt_chain;
    j["max_contraction"] = g.max_contraction;
    j["contraction_bound"] = 1.0 / (1.0 + s.model->diffusion.r * g.min_dt_chain);
    j["monotone_iterates"] = g.monotone_iterates;
    j["bellman_residual"] = bc.max_residual;
    j["min_gradient_excess"] = bc.min_gradient_excess;
    j["max_rel_gap"] = cmp.max_rel_gap;
    j["worst"] = {cmp.worst_x, cmp.worst_m};
    j["hausdorff"] = cmp.hausdorff;
    j["max_boundary_gap"] = cmp.max_boundary_gap;
    ordered_json probes = ordered_json::array();
    for (const auto& [x, m] : mc_probe_points(*s.surface)) {
        (void)m;
        const double vb = s.surface->Vbar(x);
        const double vh = g.diagonal(x) + s.model->downgraded.U(x) * (1.0 - s.model->tipping.F(x));
        probes.push_back({{"x", x}, {"Vbar", vb}, {"Vbar_hat", vh}, {"rel_gap", std::abs(vh - vb) / (1.0 + vb)}});
    }
    j["vbar_probes"] = probes;
    write_json(out_path(c, "oracle.json"), j);
    c.log << "oracle: h=" << g.h << " iterations=" << g.iterations << " max_rel_gap=" << cmp.max_rel_gap
          << " boundary_gap=" << cmp.max_boundary_gap << "\n";
    return kExitOk;
}

// --- sweep-epsilon ----------------------------------------------------------

int cmd_sweep(Context& c) {
    const Solved s = solve_pipeline(c.cfg);
    const auto& sc = c.cfg.simulate;
    const double u = s.model->downgraded.u_star;
    if (!(u > s.surface->mbar()))
        throw ParameterError("sweep-epsilon: the configuration is in the optimal-exists regime (u* <= mbar)");
    const double x = sc.x0 ? *sc.x0 : u;
    const double m = sc.m0 ? *sc.m0 : (sc.x0 ? *sc.x0 : u);
    const EpsilonSweep sw = run_epsilon_sweep(*s.surface, x, m, sc.eps_list, path_config(sc));

    prepare_output(c);
    {
        CsvWriter w(out_path(c, "sweep.csv"), {"eps", "estimate", "std_error", "W", "gap", "mean_phase_time", "phase_bound",
                                               "continuation_estimate", "continuation_se"});
        for (const auto& r : sw.rows)
            w.row({fmt17(r.eps), fmt17(r.estimate), fmt17(r.std_error), fmt17(sw.W), fmt17(r.gap), fmt17(r.mean_phase_time),
                   fmt17(r.phase_bound), fmt17(r.continuation_estimate), fmt17(r.continuation_se)});
    }
    ordered_json j = header("sweep-epsilon");
    j["config"] = config_json(c.cfg);
    j["x"] = sw.x;
    j["m"] = sw.m;
    j["W"] = sw.W;
    j["mbar"] = s.surface->mbar();
    j["u_star"] = u;
    j["paths"] = sc.paths;
    j["dt"] = sc.dt;
    j["improvement"] = sw.improvement;
    j["improvement_se"] = sw.improvement_se;
    j["gaps_positive"] = sw.gaps_positive;
    j["nondecreasing"] = sw.nondecreasing;
    j["gap_shrinks"] = sw.gap_shrinks;
    j["warnings"] = sw.warnings;
    write_json(out_path(c, "sweep.json"), j);
    for (const auto& r : sw.rows)
        c.log << "eps=" << r.eps << " estimate=" << r.estimate << " +- " << r.std_error << " gap=" << r.gap << "\n";
    const bool ok = sw.gaps_positive && sw.nondecreasing && sw.gap_shrinks;
    return ok ? kExitOk : kExitVerifyFailed;
}

// --- report -----------------------------------------------------------------

ordered_json read_json(const std::string& path) {
    std::ifstream in(path);
    return ordered_json::parse(in);
}

int cmd_report(Context& c) {
    const std::vector<std::string> required = {"summary.json", "boundary.csv"};
    const std::vector<std::string> optional = {"verify.json", "simulate.json", "mc.csv", "sweep.json", "sweep.csv",
                                               "oracle.json"};
    std::vector<std::string> missing_required, missing_optional;
    for (const auto& f : required)
        if (!fs::exists(out_path(c, f))) missing_required.push_back(f);
    for (const auto& f : optional)
        if (!fs::exists(out_path(c, f))) missing_optional.push_back(f);
    if (!missing_required.empty()) {
        std::string msg = "report: missing artifacts in " + c.spec.output_dir + ":";
        for (const auto& f : missing_required) msg += " " + f;
        throw ConfigError(msg + " (run solve first)");
    }

    const Solved s = solve_pipeline(c.cfg);
    const Model& model = *s.model;
    const ValueSurface& W = *s.surface;
    const ordered_json summary = read_json(out_path(c, "summary.json"));

    // b <= eta re-check on the stored arrays
    const CsvTable bt = read_csv(out_path(c, "boundary.csv"));
    const auto bm = bt.numbers("m"), bb = bt.numbers("b"), be = bt.numbers("eta");
    double worst = -kInf;
    for (std::size_t i = 0; i < bm.size(); ++i) worst = std::max(worst, bb[i] - be[i]);
    const bool b_below_eta = worst <= 1e-8;
    {
        CsvWriter w(out_path(c, "plot_b_eta.csv"), {"m", "b", "eta"});
        for (std::size_t i = 0; i < bm.size(); ++i) w.row({fmt17(bm[i]), fmt17(bb[i]), fmt17(be[i])});
    }
    {
        CsvWriter w(out_path(c, "plot_w_slices.csv"), {"m", "x", "region", "W"});
        const double mbar = W.mbar();
        const double xm = W.x_max();
        for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0, 1.25}) {
            const double m = frac * mbar;
            for (int i = 0; i <= 200; ++i) {
                const double x = m + (xm - m) * i / 200.0;
                const Region r = W.classify(x, m);
                w.row({fmt17(m), fmt17(x), region_name(r), fmt17(W.W_branch(x, m, r))});
            }
        }
    }
    {
        CsvWriter w(out_path(c, "plot_vbar.csv"), {"x", "W_diag", "tip_term", "Vbar"});
        for (int i = 0; i <= 200; ++i) {
            const double x = W.x_max() * i / 200.0;
            const double wd = W.W(x, x);
            const double tip = model.downgraded.U(x) * (1.0 - model.tipping.F(x));
            w.row({fmt17(x), fmt17(wd), fmt17(tip), fmt17(wd + tip)});
        }
    }

    std::ostringstream md;
    const auto& sol = summary["solution"];
    md << "# Run report\n\n";
    md << "## Solution\n\n";
    md << "| quantity | value |\n|---|---|\n";
    for (const char* k : {"xbar", "x0", "mbar", "u_star", "ybar", "b_prime_mbar", "x_max", "flat_from"})
        md << "| " << k << " | " << fmt17(sol[k].get<double>()) << " |\n";
    md << "| regime | " << sol["regime"].get<std::string>() << " |\n\n";
    md << "b(m) <= eta(m) on the stored grid: " << (b_below_eta ? "yes" : "NO") << " (max b - eta = " << fmt17(worst)
       << ")\n\n";

    md << "## Original-problem value\n\n";
    md << "Vbar(x) = W(x, x) + U(x)(1 - F(x)); columns in plot_vbar.csv.\n\n";
    md << "| x | W(x,x) | U(x)(1-F(x)) | Vbar(x) |\n|---|---|---|---|\n";
    for (double frac : {0.25, 0.5, 1.0, 1.5}) {
        const double x = frac * W.mbar();
        const double wd = W.W(x, x);
        const double tip = model.downgraded.U(x) * (1.0 - model.tipping.F(x));
        md << "| " << fmt17(x) << " | " << fmt17(wd) << " | " << fmt17(tip) << " | " << fmt17(wd + tip) << " |\n";
    }
    md << "\n";

    std::vector<std::string> warnings;
    for (const auto& w : summary.value("warnings", ordered_json::array())) warnings.push_back(w.get<std::string>());

    if (fs::exists(out_path(c, "verify.json"))) {
        const auto v = read_json(out_path(c, "verify.json"));
        md << "## Verification\n\n";
        md << "passed: " << (v["passed"].get<bool>() ? "yes" : "no") << "; max |(L-r)W| in J1 = "
           << fmt17(v["hjb"]["max_abs_pde_j1"].get<double>()) << "; max Neumann gap = "
           << fmt17(v["diagonal"]["max_neumann_gap"].get<double>()) << "\n\n";
    }
    if (fs::exists(out_path(c, "mc.csv"))) {
        const CsvTable mc = read_csv(out_path(c, "mc.csv"));
        CsvWriter w(out_path(c, "plot_mc.csv"), {"kind", "x", "m", "estimate", "std_error", "reference"});
        md << "## Monte Carlo vs analytic\n\n| kind | x | m | estimate | std error | reference |\n|---|---|---|---|---|---|\n";
        for (const auto& r : mc.rows) {
            const auto get = [&](const char* k) { return r.at(mc.column(k)); };
            w.row({get("kind"), get("x"), get("m"), get("estimate"), get("std_error"), get("reference")});
            md << "| " << get("kind") << " | " << get("x") << " | " << get("m") << " | " << get("estimate") << " | "
               << get("std_error") << " | " << get("reference") << " |\n";
        }
        md << "\n";
    }
    if (fs::exists(out_path(c, "simulate.json")))
        for (const auto& w : read_json(out_path(c, "simulate.json")).value("warnings", ordered_json::array()))
            warnings.push_back("simulate: " + w.get<std::string>());
    if (fs::exists(out_path(c, "sweep.csv"))) {
        const CsvTable st = read_csv(out_path(c, "sweep.csv"));
        CsvWriter w(out_path(c, "plot_sweep.csv"), st.header);
        md << "## Epsilon sweep\n\n| eps | estimate | std error | gap | continuation estimate |\n|---|---|---|---|---|\n";
        for (const auto& r : st.rows) {
            w.row(r);
            md << "| " << r.at(st.column("eps")) << " | " << r.at(st.column("estimate")) << " | "
               << r.at(st.column("std_error")) << " | " << r.at(st.column("gap")) << " | "
               << r.at(st.column("continuation_estimate")) << " |\n";
        }
        md << "\n";
    }
    if (fs::exists(out_path(c, "sweep.json")))
        for (const auto& w : read_json(out_path(c, "sweep.json")).value("warnings", ordered_json::array()))
            warnings.push_back("sweep-epsilon: " + w.get<std::string>());
    if (fs::exists(out_path(c, "oracle.json"))) {
        const auto o = read_json(out_path(c, "oracle.json"));
        md << "## DP oracle\n\nh = " << fmt17(o["h"].get<double>()) << ", max relative gap "
           << fmt17(o["max_rel_gap"].get<double>()) << ", boundary gap " << fmt17(o["max_boundary_gap"].get<double>())
           << "\n\n";
    }
    md << "## Warnings\n\n";
    if (warnings.empty()) md << "none\n";
    for (const auto& w : warnings) md << "- " << w << "\n";
    if (!missing_optional.empty()) {
        md << "\n## Missing artifacts\n\n";
        for (const auto& f : missing_optional) md << "- " << f << "\n";
    }
    std::ofstream(out_path(c, "report.md")) << md.str();
    c.log << "report: " << out_path(c, "report.md") << "\n";
    for (const auto& f : missing_optional) c.log << "  missing " << f << "\n";
    return kExitOk;
}

std::string error_type(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    if (dynamic_cast<const ParameterError*>(&e)) return "ParameterError";
    if (dynamic_cast<const DomainError*>(&e)) return "DomainError";
    if (dynamic_cast<const RangeError*>(&e)) return "RangeError";
    if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
    if (dynamic_cast<const Error*>(&e)) return "Error";
    return "InternalError";
}

int error_code(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
        dynamic_cast<const DomainError*>(&e))
        return kExitUsage;
    return kExitNumerical;
}

}  // namespace

const std::vector<std::string>& known_commands() {
    static const std::vector<std::string> cmds = {"validate", "solve",         "verify", "simulate",
                                                  "oracle",   "sweep-epsilon", "report"};
    return cmds;
}

int run_command(const RunSpec& spec, std::ostream& log, std::ostream& err) {
    try {
        const auto& cmds = known_commands();
        if (std::find(cmds.begin(), cmds.end(), spec.command) == cmds.end())
            throw ConfigError("unknown command '" + spec.command + "'");
        RunConfig cfg = spec.config_path.empty() ? parse_config("", spec.overrides)
                                                 : load_config(spec.config_path, spec.overrides);
        Context c{spec, cfg, log};
        if (spec.command == "validate") return cmd_validate(c);
        if (spec.command == "solve") return cmd_solve(c);
        if (spec.command == "verify") return cmd_verify(c);
        if (spec.command == "simulate") return cmd_simulate(c);
        if (spec.command == "oracle") return cmd_oracle(c);
        if (spec.command == "sweep-epsilon") return cmd_sweep(c);
        return cmd_report(c);
    } catch (const std::exception& e) {
        const int code = error_code(e);
        ordered_json j;
        j["schema_version"] = kSchemaVersion;
        j["error"] = {{"type", error_type(e)}, {"message", e.what()}, {"command", spec.command}, {"exit_code", code}};
        if (auto* re = dynamic_cast<const RangeError*>(&e))
            j["error"]["bracket"] = {{"lo", re->lo}, {"hi", re->hi}, {"f_lo", re->f_lo}, {"f_hi", re->f_hi}};
        err << j.dump() << '\n';
        return code;
    }
}

int cli_main(int argc, char** argv) {
    CLI::App app{"Singular extraction control with an unobservable tipping point"};
    app.set_help_flag("--help", "print this help and exit");  // -h would clash with --h
    RunSpec spec;
    std::vector<std::string> sets;
    app.add_option("command", spec.command, "validate | solve | verify | simulate | oracle | sweep-epsilon | report")
        ->required();
    app.add_option("-c,--config", spec.config_path, "TOML config file");
    app.add_option("-o,--out", spec.output_dir, "output directory")->capture_default_str();
    app.add_option("--set", sets, "override, section.key=value (repeatable)");

    std::string policy, eps_list;
    double x0 = NAN, m0 = NAN, dt = NAN, h = NAN, xmax = NAN, tol = NAN, tol_pde = NAN, perturb = NAN;
    long paths = -1, seed = -1;
    app.add_option("--policy", policy, "reflect-boundary | reflect-level | lump-sum");
    app.add_option("--x0", x0, "initial reserve");
    app.add_option("--m0", m0, "initial running minimum");
    app.add_option("--paths", paths, "Monte Carlo paths");
    app.add_option("--dt", dt, "time step");
    app.add_option("--seed", seed, "RNG seed");
    app.add_option("--eps-list", eps_list, "comma-separated rates for sweep-epsilon");
    app.add_option("--h", h, "oracle lattice step");
    app.add_option("--xmax", xmax, "oracle lattice cap");
    app.add_option("--tol", tol, "oracle value-iteration tolerance");
    app.add_option("--tol-pde", tol_pde, "verifier PDE tolerance");
    app.add_option("--perturb-boundary", perturb, "relative seam shift applied before verification");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e);
            return kExitOk;
        }
        ordered_json j;
        j["schema_version"] = kSchemaVersion;
        j["error"] = {{"type", "UsageError"}, {"message", e.what()}, {"exit_code", kExitUsage}};
        std::cerr << j.dump() << '\n';
        return kExitUsage;
    }

    spec.overrides = sets;
    auto add = [&](const std::string& k, const std::string& v) { spec.overrides.push_back(k + "=" + v); };
    if (!policy.empty()) add("simulate.policy", "\"" + policy + "\"");
    if (!std::isnan(x0)) add("simulate.x0", fmt17(x0));
    if (!std::isnan(m0)) add("simulate.m0", fmt17(m0));
    if (paths >= 0) add("simulate.paths", std::to_string(paths));
    if (!std::isnan(dt)) add("simulate.dt", fmt17(dt));
    if (seed >= 0) add("simulate.seed", std::to_string(seed));
    if (!eps_list.empty()) add("simulate.eps_list", "[" + eps_list + "]");
    if (!std::isnan(h)) add("oracle.h", fmt17(h));
    if (!std::isnan(xmax)) add("oracle.x_max", fmt17(xmax));
    if (!std::isnan(tol)) add("oracle.tol", fmt17(tol));
    if (!std::isnan(tol_pde)) add("verify.tol_pde", fmt17(tol_pde));
    if (!std::isnan(perturb)) add("verify.perturb", fmt17(perturb));
    return run_command(spec, std::cout, std::cerr);
}

}  // namespace tipping
