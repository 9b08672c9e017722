#include "tipping/simulate.hpp"

#include <algorithm>
#include <cmath>

#include <boost/random/normal_distribution.hpp>

#include "tipping/error.hpp"
#include "tipping/parallel.hpp"

namespace tipping {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ (tag * 0xd1b54a32d192ed03ULL));
}

enum class Tag : std::uint64_t { Noise = 1, Tip = 2, Reflect = 3 };

double uniform_open(std::uint64_t h) { return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53; }

// xoshiro256++, state filled from splitmix64 of the key.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;
    explicit Xoshiro256pp(std::uint64_t key) {
        for (auto& w : s_) w = key = splitmix64(key);
    }
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }
    result_type operator()() {
        const std::uint64_t r = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return r;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

class NormalStream {
public:
    NormalStream(std::uint64_t key, double sign) : eng_(key), sign_(sign) {}
    double operator()() { return sign_ * dist_(eng_); }

private:
    Xoshiro256pp eng_;
    boost::random::normal_distribution<double> dist_;
    double sign_;
};

enum class Kind { Boundary, Level, Lump, Rate };

struct Control {
    Kind kind;
    const Boundary* b = nullptr;
    double level = 0.0;
    double eps = 0.0;
    double mbar = 0.0;
    double u_star = 0.0;
};

Control resolve(const Policy& p) {
    Control c{};
    if (auto* q = std::get_if<ReflectAtBoundary>(&p)) {
        if (!q->boundary) throw ParameterError("ReflectAtBoundary: boundary missing");
        c.kind = Kind::Boundary;
        c.b = q->boundary.get();
        c.mbar = c.b->mbar();
    } else if (auto* q = std::get_if<ReflectAtLevel>(&p)) {
        if (!(q->threshold >= 0.0)) throw ParameterError("ReflectAtLevel: threshold must be >= 0");
        c.kind = Kind::Level;
        c.level = q->threshold;
    } else if (auto* q = std::get_if<LumpSumTo>(&p)) {
        if (!(q->target >= 0.0)) throw ParameterError("LumpSumTo: target must be >= 0");
        c.kind = Kind::Lump;
        c.level = q->target;
    } else {
        const auto& e = std::get<EpsilonRate>(p);
        if (!(e.eps > 0.0)) throw ParameterError("EpsilonRate: eps must be > 0");
        if (!e.boundary) throw ParameterError("EpsilonRate: boundary missing");
        if (!(e.target_mbar >= 0.0) || !(e.u_star >= 0.0)) throw ParameterError("EpsilonRate: levels must be >= 0");
        c.kind = Kind::Rate;
        c.b = e.boundary.get();
        c.eps = e.eps;
        c.mbar = e.target_mbar;
        c.u_star = e.u_star;
    }
    return c;
}

double boundary_cap(const Control& c, double m) { return (*c.b)(std::min(m, c.mbar)); }

double start_target(const Control& c, double x, double m) {
    switch (c.kind) {
        case Kind::Boundary:
            if (m >= c.mbar) return std::min(x, c.mbar);
            return std::min(x, boundary_cap(c, m));
        case Kind::Level:
        case Kind::Lump:
            return std::min(x, c.level);
        case Kind::Rate:
            return std::min(x, std::min(m, c.u_star));
    }
    return x;
}

struct Coeffs {
    const DiffusionSpec* d;
    bool constant;
    double mu, sigma;

    explicit Coeffs(const DiffusionSpec& ds) : d(&ds), constant(ds.constant.has_value()) {
        mu = constant ? ds.constant->mu : 0.0;
        sigma = constant ? ds.constant->sigma : 0.0;
    }
    double drift(double x) const { return constant ? mu : d->mu(x); }
    double vol(double x) const { return constant ? sigma : d->sigma(x); }
};

struct PathOptions {
    bool stop_at_phase = false;  // EpsilonRate: stop once X reaches target_mbar
};

// y < 0: Markovian reward; otherwise the raw objective with tipping level y.
PathResult run_path(const Model& model, const Control& c, const PathConfig& cfg, double t_max, double x, double m,
                    double y, NormalStream& noise, const PathOptions& po, std::vector<PathRecord>* rec) {
    const auto& F = model.tipping.F;
    const auto& U = model.downgraded.U;
    const bool raw = y >= 0.0;
    const Coeffs co(model.diffusion);
    const double dt = cfg.dt;
    const double sq = std::sqrt(dt);
    const double edt = std::exp(-model.diffusion.r * dt);
    PathResult out;

    if (x < m || m < 0.0) throw DomainError("simulate_path: need x >= m >= 0");

    if (raw && y >= x) {
        out.tip_time = 0.0;
        out.tip_level = x;
        out.terminal_payment = U(x);
        return out;
    }

    double Fm = F(m);
    auto lower_min = [&](double m_new, double disc, bool jump) {
        const double F_new = F(m_new);
        if (!raw) {
            const double v = disc * U(m_new) * (Fm - F_new);
            (jump ? out.markov_jump : out.markov_continuous) += v;
        }
        m = m_new;
        Fm = F_new;
    };

    // time-zero lump
    const double target = start_target(c, x, m);
    if (target < x) {
        const double dL = x - target;
        if (raw) {
            out.discounted_extraction += dL;
        } else {
            out.markov_extraction += Fm * dL;
        }
        x = target;
        if (x < m) lower_min(x, 1.0, true);
        if (rec) rec->push_back({0.0, x, m, dL, x});
        if (raw && x <= y) {
            out.tip_time = 0.0;
            out.tip_level = x;
            out.terminal_payment = U(x);
            return out;
        }
        if (x <= 0.0) {
            out.hit_zero = true;
            return out;
        }
    }

    bool rate_phase = c.kind == Kind::Rate;
    if (rate_phase && x <= c.mbar) {
        rate_phase = false;
        out.phase_time = 0.0;
        if (po.stop_at_phase) {
            out.x_end = x;
            out.m_end = m;
            return out;
        }
    }
    const double rate_dl = c.kind == Kind::Rate ? dt / c.eps : 0.0;

    auto cap_for = [&](double mm) {
        switch (c.kind) {
            case Kind::Boundary: return boundary_cap(c, mm);
            case Kind::Level: return c.level;
            case Kind::Lump: return kInf;
            case Kind::Rate: return rate_phase ? kInf : boundary_cap(c, mm);
        }
        return kInf;
    };
    double cap = cap_for(m);

    const long n_steps = static_cast<long>(std::ceil(t_max / dt - 1e-9));
    const double a_dt = co.mu * dt, s_sq = co.sigma * sq;
    double disc = 1.0;
    for (long k = 1; k <= n_steps; ++k) {
        const double t = k * dt;
        disc *= edt;
        const double x1 = co.constant ? x + a_dt + s_sq * noise() : x + co.drift(x) * dt + co.vol(x) * sq * noise();

        // Common step: no new minimum, reflection (if any) at a cap above m. Branch-free on the cap.
        if (x1 > m && cap >= m && !rate_phase && !rec) {
            const double x2 = std::min(x1, cap);
            if (raw)
                out.discounted_extraction += disc * (x1 - x2);
            else
                out.markov_extraction += disc * Fm * (x1 - x2);
            x = x2;
            continue;
        }

        if (raw && x1 <= y) {
            out.tip_time = t;
            out.tip_level = std::max(x1, 0.0);
            out.terminal_payment = disc * U(out.tip_level);
            out.stop_time = t;
            if (rec) rec->push_back({t, x1, std::min(m, out.tip_level), 0.0, cap});
            return out;
        }
        if (x1 < m) {
            lower_min(std::max(x1, 0.0), disc, false);
            if (c.kind != Kind::Rate || !rate_phase) cap = cap_for(m);
        }
        if (x1 <= 0.0) {
            out.hit_zero = true;
            out.stop_time = t;
            if (rec) rec->push_back({t, x1, m, 0.0, cap});
            return out;
        }

        double dL = 0.0;
        double x2 = x1;
        if (rate_phase) {
            if (x1 > c.mbar) {
                dL = std::min(rate_dl, x1 - c.mbar);
                x2 = x1 - dL;
            }
        } else if (x1 > cap) {
            dL = x1 - cap;
            x2 = cap;
        }
        if (dL > 0.0) {
            if (raw)
                out.discounted_extraction += disc * dL;
            else
                out.markov_extraction += disc * Fm * dL;
        }
        if (x2 < m) {
            lower_min(x2, disc, !rate_phase);
            cap = cap_for(m);
        }
        x = x2;
        if (rec) rec->push_back({t, x, m, dL, cap});

        if (raw && x <= y) {
            out.tip_time = t;
            out.tip_level = x;
            out.terminal_payment = disc * U(x);
            out.stop_time = t;
            return out;
        }
        if (x <= 0.0) {
            out.hit_zero = true;
            out.stop_time = t;
            return out;
        }
        if (rate_phase && x <= c.mbar) {
            rate_phase = false;
            out.phase_time = t;
            if (po.stop_at_phase) {
                out.stop_time = t;
                out.x_end = x;
                out.m_end = m;
                return out;
            }
            cap = cap_for(m);
        }
    }
    out.truncated = true;
    out.stop_time = n_steps * dt;
    return out;
}

struct Moments {
    double sum = 0.0, sumsq = 0.0;
    long units = 0, paths = 0, truncated = 0, hit_zero = 0, tip_zero = 0;

    void add(const Moments& o) {
        sum += o.sum;
        sumsq += o.sumsq;
        units += o.units;
        paths += o.paths;
        truncated += o.truncated;
        hit_zero += o.hit_zero;
        tip_zero += o.tip_zero;
    }
    double mean() const { return units ? sum / units : 0.0; }
    double se() const {
        if (units < 2) return 0.0;
        const double mu = mean();
        const double var = std::max(0.0, (sumsq - units * mu * mu) / (units - 1));
        return std::sqrt(var / units);
    }
};

long path_count(const PathConfig& cfg) {
    if (cfg.n_paths < 2) throw ParameterError("PathConfig: n_paths must be >= 2");
    return cfg.antithetic ? cfg.n_paths + (cfg.n_paths % 2) : cfg.n_paths;
}

template <class PathFn>
Estimate run_estimate(const PathConfig& cfg, double r, PathFn&& one) {
    Estimate est;
    const double t_max = resolve_t_max(cfg, r, &est.warnings);
    const long n = path_count(cfg);
    const int per = cfg.antithetic ? 2 : 1;
    const long units = n / per;
    const long batch_units = std::max<long>(1, cfg.batch_paths / per);
    const long nb = (units + batch_units - 1) / batch_units;
    std::vector<Moments> mom(nb);
    parallel_for(static_cast<std::size_t>(nb), [&](std::size_t b) {
        Moments& mo = mom[b];
        const long lo = static_cast<long>(b) * batch_units;
        const long hi = std::min(units, lo + batch_units);
        for (long u = lo; u < hi; ++u) {
            double v = 0.0;
            for (int s = 0; s < per; ++s) {
                const PathResult pr = one(static_cast<std::uint64_t>(u), s == 0 ? 1.0 : -1.0, s, t_max);
                v += pr.raw_payoff() + pr.markov_reward();
                mo.truncated += pr.truncated;
                mo.hit_zero += pr.hit_zero;
                mo.tip_zero += pr.tip_time == 0.0;
                ++mo.paths;
            }
            v /= per;
            mo.sum += v;
            mo.sumsq += v * v;
            ++mo.units;
        }
    });
    Moments tot;
    for (const auto& mo : mom) {
        tot.add(mo);
        est.batches.push_back({mo.paths, mo.mean(), mo.se()});
    }
    est.mean = tot.mean();
    est.std_error = tot.se();
    est.n_paths = tot.paths;
    est.truncated_fraction = static_cast<double>(tot.truncated) / tot.paths;
    est.hit_zero_fraction = static_cast<double>(tot.hit_zero) / tot.paths;
    est.tip_at_zero_fraction = static_cast<double>(tot.tip_zero) / tot.paths;
    if (est.truncated_fraction > 0.01) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "horizon truncation: %.4g of paths reached t_max = %.6g (discount tail %.3g)",
                      est.truncated_fraction, t_max, std::exp(-r * t_max));
        est.warnings.emplace_back(buf);
    }
    return est;
}

}  // namespace

double resolve_t_max(const PathConfig& cfg, double r, std::vector<std::string>* warnings) {
    if (!(cfg.dt > 0.0)) throw ParameterError("PathConfig: dt must be > 0");
    const double t_max = cfg.t_max > 0.0 ? cfg.t_max : std::log(1e6) / r;
    if (t_max < 100.0 * cfg.dt) throw ParameterError("PathConfig: t_max must be >= 100 dt");
    if (warnings && std::exp(-r * t_max) > 1e-6 * (1.0 + 1e-9)) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "discount tail exp(-r t_max) = %.3g exceeds 1e-6", std::exp(-r * t_max));
        warnings->emplace_back(buf);
    }
    return t_max;
}

std::vector<std::pair<double, double>> mc_probe_points(const ValueSurface& surface) {
    const Boundary& b = surface.boundary();
    const double mbar = surface.mbar();
    const double x0 = b.x0();
    const double m1 = 0.5 * std::min(x0, mbar);
    return {{mbar, mbar}, {x0, m1}, {0.5 * b(m1) + 0.5 * m1, m1}};
}

std::string policy_name(const Policy& p) {
    switch (p.index()) {
        case 0: return "reflect-boundary";
        case 1: return "reflect-level";
        case 2: return "lump-sum";
        default: return "epsilon-rate";
    }
}

double initial_target(const Policy& policy, double x, double m) { return start_target(resolve(policy), x, m); }

StepOutcome step_reflected(const Model& model, const StepState& s, const Policy& policy, double dt, double noise) {
    if (s.m < 0.0 || s.x < s.m) throw DomainError("step_reflected: need x >= m >= 0");
    const Control c = resolve(policy);
    const Coeffs co(model.diffusion);
    StepOutcome o;
    o.proposal = s.x + co.drift(s.x) * dt + co.vol(s.x) * std::sqrt(dt) * noise;
    double m1 = std::max(std::min(s.m, o.proposal), 0.0);
    double x2 = o.proposal;
    if (o.proposal > 0.0) {
        double cap = kInf;
        switch (c.kind) {
            case Kind::Boundary: cap = boundary_cap(c, m1); break;
            case Kind::Level: cap = c.level; break;
            case Kind::Lump: break;
            case Kind::Rate:
                if (o.proposal > c.mbar) cap = std::max(c.mbar, o.proposal - dt / c.eps);
                break;
        }
        if (o.proposal > cap) {
            o.dL = o.proposal - cap;
            x2 = cap;
        }
    }
    o.hit_zero = x2 <= 0.0;
    o.next = {x2, std::max(std::min(m1, x2), 0.0), s.t + dt};
    return o;
}

PathResult simulate_path(const Model& model, const Policy& policy, const PathConfig& cfg, double x, double m, double y,
                         std::uint64_t stream, double sign, std::vector<PathRecord>* record) {
    const Control c = resolve(policy);
    const double t_max = resolve_t_max(cfg, model.diffusion.r);
    NormalStream z(stream_key(cfg.seed, stream, static_cast<std::uint64_t>(Tag::Noise)), sign);
    return run_path(model, c, cfg, t_max, x, m, y, z, {}, record);
}

Estimate estimate_raw(const Model& model, const Policy& policy, const PathConfig& cfg, double x) {
    if (!(x >= 0.0)) throw DomainError("estimate_raw: need x >= 0");
    const Control c = resolve(policy);
    const auto& law = model.tipping;
    return run_estimate(cfg, model.diffusion.r, [&](std::uint64_t u, double sign, int s, double t_max) {
        double v = uniform_open(stream_key(cfg.seed, u, static_cast<std::uint64_t>(Tag::Tip)));
        if (s == 1) v = 1.0 - v;
        const double y = law.inverse_cdf(v);
        NormalStream z(stream_key(cfg.seed, u, static_cast<std::uint64_t>(Tag::Noise)), sign);
        return run_path(model, c, cfg, t_max, x, x, y, z, {}, nullptr);
    });
}

Estimate estimate_markov(const Model& model, const Policy& policy, const PathConfig& cfg, double x, double m) {
    if (m < 0.0 || x < m) throw DomainError("estimate_markov: need x >= m >= 0");
    const Control c = resolve(policy);
    return run_estimate(cfg, model.diffusion.r, [&](std::uint64_t u, double sign, int, double t_max) {
        NormalStream z(stream_key(cfg.seed, u, static_cast<std::uint64_t>(Tag::Noise)), sign);
        return run_path(model, c, cfg, t_max, x, m, -1.0, z, {}, nullptr);
    });
}

EpsilonSweep run_epsilon_sweep(const ValueSurface& surface, double x, double m, std::vector<double> eps_list,
                               const PathConfig& cfg) {
    const Model& model = surface.model();
    const double mbar = surface.mbar();
    const double u_star = model.downgraded.u_star;
    if (!(u_star > mbar)) throw ParameterError("run_epsilon_sweep: needs u* > mbar (epsilon-only regime)");
    if (!(m > mbar) || x < m) throw DomainError("run_epsilon_sweep: need x >= m > mbar");
    if (eps_list.empty()) throw ParameterError("run_epsilon_sweep: empty eps list");
    for (double e : eps_list)
        if (!(e > 0.0)) throw ParameterError("run_epsilon_sweep: eps must be > 0");
    std::sort(eps_list.begin(), eps_list.end(), std::greater<>());

    EpsilonSweep out;
    out.x = x;
    out.m = m;
    out.W = surface.W(x, m);
    const double t_max = resolve_t_max(cfg, model.diffusion.r, &out.warnings);
    const auto bptr = surface.boundary_ptr();
    const Control reflect = resolve(ReflectAtBoundary{bptr});
    const std::size_t ne = eps_list.size();
    std::vector<Control> rate(ne);
    for (std::size_t i = 0; i < ne; ++i) rate[i] = resolve(EpsilonRate{eps_list[i], bptr, mbar, u_star});

    const long n = path_count(cfg);
    const int per = cfg.antithetic ? 2 : 1;
    const long units = n / per;
    const long batch_units = std::max<long>(1, cfg.batch_paths / per);
    const long nb = (units + batch_units - 1) / batch_units;

    // per batch: moments per eps, phase times, paired difference last - first, truncation count
    struct Acc {
        std::vector<Moments> est, hyb;
        std::vector<double> tau_sum;
        Moments diff;
        long truncated = 0, paths = 0;
    };
    std::vector<Acc> acc(nb);
    PathOptions phase_only;
    phase_only.stop_at_phase = true;

    parallel_for(static_cast<std::size_t>(nb), [&](std::size_t b) {
        Acc& a = acc[b];
        a.est.assign(ne, Moments{});
        a.hyb.assign(ne, Moments{});
        a.tau_sum.assign(ne, 0.0);
        std::vector<double> v(ne), h(ne);
        const long lo = static_cast<long>(b) * batch_units;
        const long hi = std::min(units, lo + batch_units);
        for (long u = lo; u < hi; ++u) {
            std::fill(v.begin(), v.end(), 0.0);
            std::fill(h.begin(), h.end(), 0.0);
            for (int s = 0; s < per; ++s) {
                const double sign = s == 0 ? 1.0 : -1.0;
                NormalStream zr(stream_key(cfg.seed, static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(Tag::Reflect)),
                                sign);
                const std::uint64_t rkey =
                    stream_key(cfg.seed, static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(Tag::Reflect));
                // reflection value from an end state; every start uses the same reflection noise
                auto reflect_from = [&](double x0, double m0) {
                    NormalStream zr(rkey, sign);
                    const PathResult rr = run_path(model, reflect, cfg, t_max, x0, m0, -1.0, zr, {}, nullptr);
                    a.truncated += rr.truncated;
                    ++a.paths;
                    return rr.markov_reward();
                };
                const double R = reflect_from(mbar, mbar);
                for (std::size_t i = 0; i < ne; ++i) {
                    NormalStream z(stream_key(cfg.seed, static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(Tag::Noise)),
                                   sign);
                    const PathResult p1 = run_path(model, rate[i], cfg, t_max, x, m, -1.0, z, phase_only, nullptr);
                    double val = p1.markov_reward();
                    double hyb = val;
                    if (std::isfinite(p1.phase_time) && !p1.hit_zero) {
                        const bool at_target = p1.x_end == mbar && p1.m_end == mbar;
                        const double Rv = at_target ? R : reflect_from(p1.x_end, p1.m_end);
                        const double d = std::exp(-model.diffusion.r * p1.phase_time);
                        val += d * Rv;
                        hyb += d * surface.W(p1.x_end, p1.m_end);
                        a.tau_sum[i] += p1.phase_time;
                    }
                    v[i] += val;
                    h[i] += hyb;
                }
            }
            for (std::size_t i = 0; i < ne; ++i) {
                const double w = v[i] / per;
                a.est[i].sum += w;
                a.est[i].sumsq += w * w;
                ++a.est[i].units;
                const double wh = h[i] / per;
                a.hyb[i].sum += wh;
                a.hyb[i].sumsq += wh * wh;
                ++a.hyb[i].units;
            }
            const double d = (v[ne - 1] - v[0]) / per;
            a.diff.sum += d;
            a.diff.sumsq += d * d;
            ++a.diff.units;
        }
    });

    std::vector<Moments> tot(ne), hyb(ne);
    std::vector<double> tau(ne, 0.0);
    Moments diff;
    long truncated = 0, paths = 0;
    for (const auto& a : acc) {
        for (std::size_t i = 0; i < ne; ++i) {
            tot[i].add(a.est[i]);
            hyb[i].add(a.hyb[i]);
            tau[i] += a.tau_sum[i];
        }
        diff.add(a.diff);
        truncated += a.truncated;
        paths += a.paths;
    }
    const double top = std::min(m, u_star);
    out.gaps_positive = true;
    out.nondecreasing = true;
    for (std::size_t i = 0; i < ne; ++i) {
        SweepRow row{eps_list[i], tot[i].mean(), tot[i].se(), out.W - tot[i].mean(), tau[i] / (static_cast<double>(tot[i].units) * per),
                     2.0 * eps_list[i] * (top - mbar), hyb[i].mean(), hyb[i].se()};
        out.gaps_positive = out.gaps_positive && row.gap > 0.0;
        if (i > 0) {
            const auto& prev = out.rows.back();
            if (row.estimate < prev.estimate - 2.0 * std::hypot(row.std_error, prev.std_error)) out.nondecreasing = false;
        }
        out.rows.push_back(row);
    }
    out.improvement = diff.mean();
    out.improvement_se = diff.se();
    out.gap_shrinks = out.improvement > 2.0 * out.improvement_se;
    if (paths > 0 && static_cast<double>(truncated) / paths > 0.01) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "horizon truncation: %.4g of reflection runs reached t_max = %.6g",
                      static_cast<double>(truncated) / paths, t_max);
        out.warnings.emplace_back(buf);
    }
    return out;
}

}  // namespace tipping
