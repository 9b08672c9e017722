#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tipping/valuefn.hpp"

namespace tipping {

struct PathConfig {
    double dt = 1e-3;
    double t_max = 0.0;  // <= 0: ln(1e6) / r
    std::uint64_t seed = 1;
    long n_paths = 100000;
    bool antithetic = true;
    long batch_paths = 4096;
};

// Horizon after defaults are applied; validates dt and t_max.
double resolve_t_max(const PathConfig& cfg, double r, std::vector<std::string>* warnings = nullptr);

struct ReflectAtBoundary {
    std::shared_ptr<const Boundary> boundary;
};
struct ReflectAtLevel {
    double threshold;
};
struct LumpSumTo {
    double target;
};
struct EpsilonRate {
    double eps;
    std::shared_ptr<const Boundary> boundary;
    double target_mbar;
    double u_star;
};

using Policy = std::variant<ReflectAtBoundary, ReflectAtLevel, LumpSumTo, EpsilonRate>;

std::string policy_name(const Policy& p);

struct PathResult {
    double discounted_extraction = 0.0;
    double tip_time = kInf;
    double tip_level = 0.0;
    double terminal_payment = 0.0;
    // Markovian reward, split by term
    double markov_extraction = 0.0;  // \int e^{-rs} F(M_{s-}) dL_s
    double markov_continuous = 0.0;  // -\int e^{-rs} U(M) f(M) dM^c
    double markov_jump = 0.0;        // \sum e^{-rs} U(M_s)(F(M_{s-}) - F(M_s))
    bool hit_zero = false;
    bool truncated = false;
    double stop_time = 0.0;
    double phase_time = kInf;  // EpsilonRate: time at which X reaches target_mbar
    double x_end = 0.0, m_end = 0.0;  // state at phase_time when stopped there

    double raw_payoff() const { return discounted_extraction + terminal_payment; }
    double markov_reward() const { return markov_extraction + markov_continuous + markov_jump; }
};

struct StepState {
    double x = 0.0, m = 0.0, t = 0.0;
};

struct StepOutcome {
    StepState next;
    double proposal = 0.0;  // x after the diffusion move
    double dL = 0.0;
    bool hit_zero = false;
};

// One Euler step followed by the policy's extraction (no rewards, no tipping).
StepOutcome step_reflected(const Model& model, const StepState& s, const Policy& policy, double dt, double noise);

// Extraction target at time 0, or x when nothing is extracted.
double initial_target(const Policy& policy, double x, double m);

struct PathRecord {
    double t, x, m, dL, cap;
};

// Single path. y < 0 selects the Markovian reward (no tipping); otherwise tipping at the first X <= y.
// stream selects the noise stream; sign = -1 flips every normal draw.
PathResult simulate_path(const Model& model, const Policy& policy, const PathConfig& cfg, double x, double m, double y,
                         std::uint64_t stream, double sign = 1.0, std::vector<PathRecord>* record = nullptr);

struct BatchEstimate {
    long paths;
    double mean;
    double std_error;
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    long n_paths = 0;
    double truncated_fraction = 0.0;
    double hit_zero_fraction = 0.0;
    double tip_at_zero_fraction = 0.0;  // raw only: tau_Y = 0
    std::vector<std::string> warnings;
    std::vector<BatchEstimate> batches;
};

Estimate estimate_raw(const Model& model, const Policy& policy, const PathConfig& cfg, double x);
Estimate estimate_markov(const Model& model, const Policy& policy, const PathConfig& cfg, double x, double m);

struct SweepRow {
    double eps;
    double estimate;
    double std_error;
    double gap;           // W(x, m) - estimate
    double mean_phase_time;
    double phase_bound;   // 2 eps (m ^ u* - mbar)
    // rate phase simulated, continuation valued by W at the end state
    double continuation_estimate;
    double continuation_se;
};

struct EpsilonSweep {
    double x = 0.0, m = 0.0, W = 0.0;
    std::vector<SweepRow> rows;
    // paired difference estimate(eps_min) - estimate(eps_max) and its standard error
    double improvement = 0.0;
    double improvement_se = 0.0;
    bool gaps_positive = false;
    bool nondecreasing = false;  // estimates nondecreasing as eps decreases, up to 2 standard errors
    bool gap_shrinks = false;    // improvement > 2 improvement_se
    std::vector<std::string> warnings;
};

// (mbar, mbar), (x0, m1), (b(m1)/2 + m1/2, m1) with m1 = min(x0, mbar)/2.
std::vector<std::pair<double, double>> mc_probe_points(const ValueSurface& surface);

// The reflection phase after the rate phase uses one noise stream per path, shared by every eps.
EpsilonSweep run_epsilon_sweep(const ValueSurface& surface, double x, double m, std::vector<double> eps_list,
                               const PathConfig& cfg);

}  // namespace tipping
