#include "tipping/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "toml.hpp"

#include "tipping/error.hpp"

namespace tipping {

namespace {

std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

double as_double(const toml::node& n, const std::string& ctx) {
    if (auto v = n.value<double>()) return *v;
    throw ConfigError(ctx + ": expected a number");
}

long as_long(const toml::node& n, const std::string& ctx) {
    if (auto v = n.as_integer()) return static_cast<long>(v->get());
    if (auto v = n.as_floating_point()) {
        const double d = v->get();
        if (d == static_cast<double>(static_cast<long>(d))) return static_cast<long>(d);
    }
    throw ConfigError(ctx + ": expected an integer");
}

std::string as_string(const toml::node& n, const std::string& ctx) {
    if (auto v = n.value<std::string>()) return *v;
    throw ConfigError(ctx + ": expected a string");
}

bool as_bool(const toml::node& n, const std::string& ctx) {
    if (auto v = n.value<bool>()) return *v;
    throw ConfigError(ctx + ": expected true or false");
}

std::vector<double> as_doubles(const toml::node& n, const std::string& ctx) {
    const auto* arr = n.as_array();
    if (!arr) throw ConfigError(ctx + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *arr) out.push_back(as_double(e, ctx));
    return out;
}

toml::table parse_toml(const std::string& text, const std::string& origin) {
    try {
        return toml::parse(text, origin);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << origin << ": " << e.description() << " (line " << e.source().begin.line << ")";
        throw ConfigError(os.str());
    }
}

void apply_override(toml::table& doc, const std::string& ov) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + ov + "': expected section.key=value");
    const std::string key = ov.substr(0, eq);
    const std::string val = ov.substr(eq + 1);
    const auto dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size())
        throw ConfigError("override '" + ov + "': key must be section.key");
    const std::string sec = key.substr(0, dot), name = key.substr(dot + 1);

    toml::table parsed;
    bool ok = true;
    try {
        parsed = toml::parse("v = " + val);
    } catch (const toml::parse_error&) {
        ok = false;
    }
    if (!doc.contains(sec)) doc.insert(sec, toml::table{});
    auto* tbl = doc[sec].as_table();
    if (!tbl) throw ConfigError("override '" + ov + "': [" + sec + "] is not a table");
    if (ok)
        tbl->insert_or_assign(name, *parsed.get("v"));
    else
        tbl->insert_or_assign(name, val);
}

template <class Fn>
void each_key(const toml::table& doc, const std::string& sec, Fn&& fn) {
    const auto* node = doc.get(sec);
    if (!node) return;
    const auto* tbl = node->as_table();
    if (!tbl) throw ConfigError("[" + sec + "] must be a table");
    for (const auto& [k, v] : *tbl) {
        const std::string key(k.str());
        if (!fn(key, v)) throw ConfigError("unknown key " + where(sec, key));
    }
}

void read(const toml::table& doc, RunConfig& c) {
    for (const auto& [k, v] : doc) {
        const std::string s(k.str());
        static const char* known[] = {"diffusion", "tipping", "downgraded", "grid", "boundary", "verify", "simulate", "oracle"};
        bool found = false;
        for (const char* n : known) found = found || s == n;
        if (!found) throw ConfigError("unknown section [" + s + "]");
        (void)v;
    }

    each_key(doc, "diffusion", [&](const std::string& k, const toml::node& v) {
        const std::string ctx = where("diffusion", k);
        if (k == "kind") c.diffusion.kind = as_string(v, ctx);
        else if (k == "mu") c.diffusion.mu = as_double(v, ctx);
        else if (k == "sigma") c.diffusion.sigma = as_double(v, ctx);
        else if (k == "r") c.diffusion.r = as_double(v, ctx);
        else return false;
        return true;
    });
    each_key(doc, "tipping", [&](const std::string& k, const toml::node& v) {
        const std::string ctx = where("tipping", k);
        if (k == "kind") c.tipping.kind = as_string(v, ctx);
        else if (k == "ybar") c.tipping.ybar = as_double(v, ctx);
        else if (k == "c") c.tipping.c = as_double(v, ctx);
        else if (k == "eps") c.tipping.eps = as_double(v, ctx);
        else if (k == "table") c.tipping.table = as_string(v, ctx);
        else if (k == "xbar") {
            if (v.is_string()) {
                if (as_string(v, ctx) != "auto") throw ConfigError(ctx + ": expected a number or \"auto\"");
                c.tipping.xbar.reset();
            } else {
                c.tipping.xbar = as_double(v, ctx);
            }
        } else return false;
        return true;
    });
    each_key(doc, "downgraded", [&](const std::string& k, const toml::node& v) {
        const std::string ctx = where("downgraded", k);
        if (k == "kind") c.downgraded.kind = as_string(v, ctx);
        else if (k == "mu_low") c.downgraded.mu_low = as_double(v, ctx);
        else if (k == "terminal") c.downgraded.terminal = as_double(v, ctx);
        else return false;
        return true;
    });
    each_key(doc, "grid", [&](const std::string& k, const toml::node& v) {
        const std::string ctx = where("grid", k);
        if (k == "x_max") c.grid.x_max = as_double(v, ctx);
        else if (k == "n") c.grid.n = static_cast<int>(as_long(v, ctx));
        else return false;
        return true;
    });
    each_key(doc, "boundary", [&](const std::string& k, const toml::node& v) {
        const std::string ctx = where("boundary", k);
        if (k == "rel_tol") c.boundary.rel_tol = as_double(v, ctx);
        else if (k == "abs_tol") c.boundary.abs_tol = as_double(v, ctx);
        else if (k == "start") c.boundary.start = as_string(v, ctx);
        else return false;
        return true;
    });
    each_key(doc, "verify", [&](const std::string& k, const toml::node& v) {
        const std::string ctx = where("verify", k);
        if (k == "nx") c.verify.nx = static_cast<int>(as_long(v, ctx));
        else if (k == "nm") c.verify.nm = static_cast<int>(as_long(v, ctx));
        else if (k == "tol_pde") c.verify.tol_pde = as_double(v, ctx);
        else if (k == "tol_slack") c.verify.tol_slack = as_double(v, ctx);
        else if (k == "stencil_h") c.verify.stencil_h = as_double(v, ctx);
        else if (k == "diagonal_n") c.verify.diagonal_n = static_cast<int>(as_long(v, ctx));
        else if (k == "perturb") c.verify.perturb = as_double(v, ctx);
        else return false;
        return true;
    });
    each_key(doc, "simulate", [&](const std::string& k, const toml::node& v) {
        const std::string ctx = where("simulate", k);
        if (k == "policy") c.simulate.policy = as_string(v, ctx);
        else if (k == "level") c.simulate.level = as_double(v, ctx);
        else if (k == "x0") c.simulate.x0 = as_double(v, ctx);
        else if (k == "m0") c.simulate.m0 = as_double(v, ctx);
        else if (k == "paths") c.simulate.paths = as_long(v, ctx);
        else if (k == "dt") c.simulate.dt = as_double(v, ctx);
        else if (k == "seed") c.simulate.seed = as_long(v, ctx);
        else if (k == "t_max") c.simulate.t_max = as_double(v, ctx);
        else if (k == "antithetic") c.simulate.antithetic = as_bool(v, ctx);
        else if (k == "eps_list") c.simulate.eps_list = as_doubles(v, ctx);
        else return false;
        return true;
    });
    each_key(doc, "oracle", [&](const std::string& k, const toml::node& v) {
        const std::string ctx = where("oracle", k);
        if (k == "n") c.oracle.n = static_cast<int>(as_long(v, ctx));
        else if (k == "h") c.oracle.h = as_double(v, ctx);
        else if (k == "x_max") c.oracle.x_max = as_double(v, ctx);
        else if (k == "tol") c.oracle.tol = as_double(v, ctx);
        else if (k == "max_iter") c.oracle.max_iter = static_cast<int>(as_long(v, ctx));
        else return false;
        return true;
    });

    if (c.diffusion.kind == "custom")
        throw ConfigError("[diffusion] kind = \"custom\" is only available through the C++ API");
    if (c.diffusion.kind != "abm") throw ConfigError("[diffusion] kind must be \"abm\"");
    if (c.tipping.kind != "uniform" && c.tipping.kind != "twocases" && c.tipping.kind != "table")
        throw ConfigError("[tipping] kind must be \"uniform\", \"twocases\" or \"table\"");
    if (c.tipping.kind == "table" && c.tipping.table.empty()) throw ConfigError("[tipping] table path missing");
    if (c.downgraded.kind != "abm" && c.downgraded.kind != "linear")
        throw ConfigError("[downgraded] kind must be \"abm\" or \"linear\"");
    if (c.boundary.start != "slope" && c.boundary.start != "sequence")
        throw ConfigError("[boundary] start must be \"slope\" or \"sequence\"");
    if (c.simulate.policy != "reflect-boundary" && c.simulate.policy != "reflect-level" &&
        c.simulate.policy != "lump-sum")
        throw ConfigError("[simulate] policy must be reflect-boundary, reflect-level or lump-sum");
    if (c.simulate.seed < 0) throw ConfigError("[simulate] seed must be >= 0");
}

}  // namespace

RunConfig parse_config(const std::string& toml_text, const std::vector<std::string>& overrides,
                       const std::string& base_dir) {
    toml::table doc = parse_toml(toml_text, "config");
    for (const auto& ov : overrides) apply_override(doc, ov);
    RunConfig c;
    c.base_dir = base_dir;
    read(doc, c);
    return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const auto parent = std::filesystem::path(path).parent_path();
    return parse_config(ss.str(), overrides, parent.empty() ? "." : parent.string());
}

std::shared_ptr<Model> build_model(const RunConfig& c) {
    auto m = std::make_shared<Model>();
    const auto& d = c.diffusion;
    m->diffusion = make_abm_diffusion(d.mu, d.sigma, d.r);
    m->fundamentals = make_abm_fundamentals(d.mu, d.sigma, d.r);
    if (c.downgraded.kind == "linear")
        m->downgraded = make_linear_downgraded();
    else
        m->downgraded = make_downgraded_abm(c.downgraded.mu_low, d.sigma, d.r, c.downgraded.terminal);
    m->x_max = c.grid.x_max;

    const auto& t = c.tipping;
    if (t.kind == "uniform") {
        m->tipping = make_uniform_tipping(t.ybar);
    } else if (t.kind == "twocases") {
        const double xb = t.xbar ? *t.xbar : find_xbar(*m);
        m->tipping = make_twocases_tipping(t.c, t.eps, xb);
    } else {
        std::filesystem::path p(t.table);
        if (p.is_relative()) p = std::filesystem::path(c.base_dir) / p;
        m->tipping = load_tipping_table(p.string());
    }
    return m;
}

Solved solve_pipeline(const RunConfig& c) {
    Solved s;
    auto model = build_model(c);
    s.model = model;
    s.aux = std::make_shared<const AuxiliarySolution>(tabulate_eta(model, c.grid.n));
    BoundaryOptions bo;
    bo.rel_tol = c.boundary.rel_tol;
    bo.abs_tol = c.boundary.abs_tol;
    bo.start = c.boundary.start == "sequence" ? StartScheme::Sequence : StartScheme::InitialSlope;
    s.boundary = std::make_shared<const Boundary>(integrate_boundary(s.aux, bo));
    s.surface = std::make_shared<const ValueSurface>(s.boundary);
    return s;
}

}  // namespace tipping
