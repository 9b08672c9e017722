#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tipping/valuefn.hpp"

namespace tipping {

struct DiffusionConfig {
    std::string kind = "abm";
    double mu = 0.5, sigma = 1.0, r = 0.1;
};

struct TippingConfig {
    std::string kind = "uniform";
    double ybar = 1.0;
    double c = 0.05, eps = 0.01;
    std::optional<double> xbar;  // twocases; empty = solver xbar
    std::string table;           // path of the (x, f) CSV, relative to the config file
};

struct DowngradedConfig {
    std::string kind = "abm";
    double mu_low = 0.3;
    double terminal = 0.0;
};

struct GridConfig {
    double x_max = 0.0;  // 0: 2 max(xbar, ybar, x0)
    int n = 256;         // eta tabulation nodes
};

struct BoundaryConfig {
    double rel_tol = 1e-10, abs_tol = 1e-12;
    std::string start = "slope";  // slope | sequence
};

struct VerifyConfig {
    int nx = 256, nm = 128;
    double tol_pde = 1e-5, tol_slack = 1e-6;
    double stencil_h = 0.0;
    int diagonal_n = 64;
    double perturb = 0.0;  // relative seam shift
};

struct SimulateConfig {
    std::string policy = "reflect-boundary";  // reflect-boundary | reflect-level | lump-sum
    double level = 0.0;
    std::optional<double> x0, m0;  // empty: the standard probe set
    long paths = 100000;
    double dt = 1e-3;
    long seed = 1;
    double t_max = 0.0;
    bool antithetic = true;
    std::vector<double> eps_list{0.2, 0.1, 0.05, 0.02};
};

struct OracleConfig {
    int n = 40;          // used when h = 0
    double h = 0.0;
    double x_max = 0.0;  // 0: solver x_max
    double tol = 1e-10;
    int max_iter = 200000;
};

struct RunConfig {
    DiffusionConfig diffusion;
    TippingConfig tipping;
    DowngradedConfig downgraded;
    GridConfig grid;
    BoundaryConfig boundary;
    VerifyConfig verify;
    SimulateConfig simulate;
    OracleConfig oracle;
    std::string base_dir = ".";
};

// Defaults, then the TOML document, then "section.key=value" overrides (values in TOML syntax;
// bare words are taken as strings).
RunConfig parse_config(const std::string& toml_text, const std::vector<std::string>& overrides,
                       const std::string& base_dir = ".");
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

std::shared_ptr<Model> build_model(const RunConfig& cfg);

struct Solved {
    std::shared_ptr<const Model> model;
    std::shared_ptr<const AuxiliarySolution> aux;
    std::shared_ptr<const Boundary> boundary;
    std::shared_ptr<const ValueSurface> surface;
};

Solved solve_pipeline(const RunConfig& cfg);

}  // namespace tipping
