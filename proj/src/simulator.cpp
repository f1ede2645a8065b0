#include "dynkin/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "dynkin/errors.hpp"
#include "dynkin/fd_operator.hpp"
#include "dynkin/grid_table.hpp"
#include "dynkin/parallel.hpp"
#include "dynkin/rng.hpp"

namespace dynkin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTol = 1e-12;

size_t step_count(const SimParams& p) { return static_cast<size_t>(std::ceil(p.t_max / p.dt - 1e-9)); }

SimParams resolved(const DiffusionSpec& diffusion, SimParams p) {
    if (p.t_max <= 0.0) p.t_max = default_horizon(diffusion);
    p.validate();
    return p;
}

// Strategy in the form the inner loop needs: sorted stop components, the
// rate sampled on the grid, atoms as bands with their hazard per unit time.
struct Compiled {
    std::vector<Interval> stop;
    bool has_rate = false;
    GridTable rate;
    struct Band {
        double y, h, w;
    };
    std::vector<Band> bands;

    double hazard_rate(double x) const {
        double v = has_rate ? rate(x) : 0.0;
        for (const auto& b : bands)
            if (std::fabs(x - b.y) < b.h) v += b.w;
        return v;
    }
};

Compiled compile(const RandomizedStrategy& s, const DiffusionSpec& d, const SimParams& p) {
    Compiled c;
    c.stop = s.stop_set.components();
    if (!s.rates.empty()) {
        std::vector<double> v(d.grid.size());
        for (size_t i = 0; i < v.size(); ++i) {
            v[i] = s.rate(d.grid[i]);
            c.has_rate = c.has_rate || v[i] > 0.0;
        }
        if (c.has_rate) c.rate = GridTable(d.grid, std::move(v));
    }
    for (const auto& a : s.atoms) {
        if (!(a.gamma > 0.0)) continue;
        double h = local_time_band(d, a.x, p);
        double sg = d.sigma(a.x);
        c.bands.push_back({a.x, h, a.gamma * sg * sg / (2.0 * h)});
    }
    return c;
}

bool inside(const std::vector<Interval>& st, double x) {
    auto it = std::lower_bound(st.begin(), st.end(), x, [](const Interval& c, double v) { return c.hi < v; });
    return it != st.end() && it->lo <= x;
}

struct Hit {
    double theta = kInf;
    double at = 0.0;
};

// First entry into the stop set along the step x -> xn: a crossing of a
// component end by the straight segment, or otherwise a Brownian-bridge
// excursion to the nearest end on either side.
template <class Bridge>
Hit pure_hit(const std::vector<Interval>& st, double x, double xn, double s2dt, Bridge& bridge) {
    Hit h;
    if (st.empty()) return h;
    auto it = std::lower_bound(st.begin(), st.end(), x, [](const Interval& c, double v) { return c.hi < v; });
    if (it != st.end() && it->lo <= x) return {0.0, x};
    if (xn > x && it != st.end() && it->lo <= xn) return {(it->lo - x) / (xn - x), it->lo};
    if (xn < x && it != st.begin() && std::prev(it)->hi >= xn) return {(x - std::prev(it)->hi) / (x - xn), std::prev(it)->hi};
    if (!(s2dt > 0.0)) return h;
    boost::random::uniform_01<double> unif;
    auto excursion = [&](double level) {
        double e = 2.0 * (level - x) * (level - xn) / s2dt;
        return e < 60.0 && unif(bridge()) < std::exp(-e);
    };
    if (it != st.end() && excursion(it->lo)) return {0.5, it->lo};
    if (it != st.begin() && excursion(std::prev(it)->hi)) return {0.5, std::prev(it)->hi};
    return h;
}

}  // namespace

void SimParams::validate() const {
    if (!(dt > 0.0)) throw ValidationError("simulation.dt must be > 0");
    if (!(t_max >= dt)) throw ValidationError("simulation.t_max must be >= dt");
    if (!(band_halfwidth >= 0.0)) throw ValidationError("simulation.band_halfwidth must be >= 0");
    if (n_paths < 1) throw ValidationError("simulation.n_paths must be >= 1");
}

double default_horizon(const DiffusionSpec& diffusion) {
    if (diffusion.r > 0.0) return std::log(1e3) / diffusion.r;
    return 1000.0;
}

double local_time_band(const DiffusionSpec& diffusion, double y, const SimParams& params) {
    if (params.band_halfwidth > 0.0) return params.band_halfwidth;
    const auto& g = diffusion.grid;
    size_t i = static_cast<size_t>(std::lower_bound(g.begin(), g.end(), y) - g.begin());
    i = std::min(i, g.size() - 1);
    if (i > 0 && y - g[i - 1] < g[i] - y) --i;
    double spacing = g.size() > 1 ? cell_width(g, i) : 0.0;
    if (i == 0 || i + 1 == g.size()) spacing = g.size() > 1 ? std::fabs(g[1] - g[0]) : 0.0;
    return std::max(2.0 * std::sqrt(params.dt) * std::fabs(diffusion.sigma(y)), spacing);
}

PathBatch::PathBatch(DiffusionSpec diffusion, double x0, SimParams params)
    : diffusion_(std::move(diffusion)), x0_(x0), params_(resolved(diffusion_, params)) {
    if (!(x0 >= diffusion_.lo() && x0 <= diffusion_.hi())) throw ValidationError("x0 outside the state range");
    steps_ = step_count(params_);
}

std::vector<double> PathBatch::path(size_t i) const {
    GridTable mu(diffusion_.grid, diffusion_.mu), sigma(diffusion_.grid, diffusion_.sigma);
    auto eng = make_engine(params_.seed, i, Stream::Noise);
    boost::random::normal_distribution<double> normal;
    double dt = params_.dt, sq = std::sqrt(dt), lo = diffusion_.lo(), hi = diffusion_.hi();
    std::vector<double> x(steps_ + 1);
    x[0] = x0_;
    for (size_t k = 0; k < steps_; ++k) {
        double v = x[k];
        x[k + 1] = reflect_into(v + mu(v) * dt + sigma(v) * sq * normal(eng), lo, hi);
    }
    return x;
}

PathBatch simulate_paths(const DiffusionSpec& diffusion, double x0, SimParams params) {
    return PathBatch(diffusion, x0, params);
}

std::vector<double> approx_local_time(const std::vector<double>& path, double y, const DiffusionSpec& diffusion,
                                      const SimParams& params) {
    double h = local_time_band(diffusion, y, params);
    double s = diffusion.sigma(y);
    double w = s * s / (2.0 * h) * params.dt;
    std::vector<double> dl(path.empty() ? 0 : path.size() - 1, 0.0);
    for (size_t k = 0; k < dl.size(); ++k)
        if (std::fabs(path[k] - y) < h) dl[k] = w;
    return dl;
}

PathOutcomes simulate_game(const DiffusionSpec& diffusion, const PayoffTriple& payoffs,
                           const std::pair<RandomizedStrategy, RandomizedStrategy>& strategies, double x0,
                           const SimParams& params_in) {
    SimParams params = resolved(diffusion, params_in);
    double lo = diffusion.lo(), hi = diffusion.hi();
    if (!(x0 >= lo && x0 <= hi)) throw ValidationError("x0 outside the state range");
    if (diffusion.r <= 0.0 && (strategies.first.stop_set.empty() || strategies.second.stop_set.empty()))
        throw PreconditionFailure(
            "r = 0 needs both strategies to have a nonempty stop set; censored paths would bias the estimate");

    Compiled c1 = compile(strategies.first, diffusion, params);
    Compiled c2 = compile(strategies.second, diffusion, params);
    GridTable mu(diffusion.grid, diffusion.mu), sigma(diffusion.grid, diffusion.sigma);
    size_t steps = step_count(params);
    double dt = params.dt, sq = std::sqrt(dt), r = diffusion.r;

    PathOutcomes out;
    out.payoff.assign(params.n_paths, 0.0);
    out.outcome.assign(params.n_paths, Outcome::Censored);
    std::vector<unsigned char> decreased(params.n_paths, 0);

    parallel_for(params.n_paths, [&](size_t i) {
        auto noise = make_engine(params.seed, i, Stream::Noise);
        auto clock = make_engine(params.seed, i, Stream::Clock);
        std::optional<std::mt19937_64> bridge_eng;
        auto bridge = [&]() -> std::mt19937_64& {
            if (!bridge_eng) bridge_eng = make_engine(params.seed, i, Stream::Bridge);
            return *bridge_eng;
        };
        boost::random::normal_distribution<double> normal;
        boost::random::exponential_distribution<double> expo(1.0);
        double e1 = expo(clock), e2 = expo(clock);

        auto settle = [&](double t, double th1, double at1, double th2, double at2) {
            double th, at;
            Outcome o;
            double w;
            if (std::fabs(th1 - th2) <= kTieTol) {
                o = Outcome::Simultaneous;
                th = th1;
                at = at1;
                w = payoffs.h(at);
            } else if (th1 < th2) {
                o = Outcome::P1First;
                th = th1;
                at = at1;
                w = payoffs.f(at);
            } else {
                o = Outcome::P2First;
                th = th2;
                at = at2;
                w = payoffs.g(at);
            }
            out.outcome[i] = o;
            out.payoff[i] = std::exp(-r * (t + th * dt)) * w;
        };

        double x = x0;
        bool in1 = inside(c1.stop, x), in2 = inside(c2.stop, x);
        if (in1 || in2) {
            settle(0.0, in1 ? 0.0 : kInf, x, in2 ? 0.0 : kInf, x);
            return;
        }
        double psi1 = 0.0, psi2 = 0.0;
        for (size_t k = 0; k < steps; ++k) {
            double t = static_cast<double>(k) * dt;
            double s = sigma(x);
            double xn = reflect_into(x + mu(x) * dt + s * sq * normal(noise), lo, hi);
            double s2dt = s * s * dt;
            Hit h1 = pure_hit(c1.stop, x, xn, s2dt, bridge);
            Hit h2 = pure_hit(c2.stop, x, xn, s2dt, bridge);
            double d1 = c1.hazard_rate(x) * dt, d2 = c2.hazard_rate(x) * dt;
            if (d1 < 0.0 || d2 < 0.0) decreased[i] = 1;
            if (d1 > 0.0 && psi1 + d1 >= e1) {
                double th = (e1 - psi1) / d1;
                if (th < h1.theta) h1 = {th, x + th * (xn - x)};
            }
            if (d2 > 0.0 && psi2 + d2 >= e2) {
                double th = (e2 - psi2) / d2;
                if (th < h2.theta) h2 = {th, x + th * (xn - x)};
            }
            if (h1.theta < kInf || h2.theta < kInf) {
                settle(t, h1.theta, h1.at, h2.theta, h2.at);
                return;
            }
            psi1 += d1;
            psi2 += d2;
            x = xn;
        }
    });
    for (auto d : decreased) out.hazard_decreases += d;
    return out;
}

namespace {

std::pair<double, double> mean_se(const std::vector<double>& v) {
    double n = static_cast<double>(v.size());
    double m = 0.0;
    for (double a : v) m += a;
    m /= n;
    double ss = 0.0;
    for (double a : v) ss += (a - m) * (a - m);
    double se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return {m, se};
}

}  // namespace

SimulationReport run_game(const DiffusionSpec& diffusion, const PayoffTriple& payoffs,
                          const std::pair<RandomizedStrategy, RandomizedStrategy>& strategies, double x0,
                          const SimParams& params) {
    PathOutcomes po = simulate_game(diffusion, payoffs, strategies, x0, params);
    SimulationReport rep;
    rep.x0 = x0;
    rep.params = resolved(diffusion, params);
    auto [m, se] = mean_se(po.payoff);
    rep.estimate = m;
    rep.std_error = se;
    rep.hazard_decreases = po.hazard_decreases;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (size_t i = 0; i < po.payoff.size(); ++i) {
        rep.max_abs_payoff = std::max(rep.max_abs_payoff, std::fabs(po.payoff[i]));
        switch (po.outcome[i]) {
            case Outcome::P1First: ++rep.counts.p1_first; s1 += po.payoff[i]; break;
            case Outcome::P2First: ++rep.counts.p2_first; s2 += po.payoff[i]; break;
            case Outcome::Simultaneous: ++rep.counts.simultaneous; s3 += po.payoff[i]; break;
            case Outcome::Censored: ++rep.counts.horizon_censored; break;
        }
    }
    auto avg = [](double s, size_t n) { return n ? s / static_cast<double>(n) : 0.0; };
    rep.mean_p1_first = avg(s1, rep.counts.p1_first);
    rep.mean_p2_first = avg(s2, rep.counts.p2_first);
    rep.mean_simultaneous = avg(s3, rep.counts.simultaneous);
    return rep;
}

DeviationReport estimate_deviation_gain(const DiffusionSpec& diffusion, const PayoffTriple& payoffs,
                                        const std::pair<RandomizedStrategy, RandomizedStrategy>& strategies,
                                        const std::vector<Deviation>& deviations, int player, double x0,
                                        const SimParams& params) {
    if (deviations.empty()) throw ValidationError("at least one deviation is needed");
    if (player != 1 && player != 2) throw ValidationError("player must be 1 or 2");
    DeviationReport rep;
    rep.player = player;
    rep.x0 = x0;
    PathOutcomes eq = simulate_game(diffusion, payoffs, strategies, x0, params);
    std::tie(rep.equilibrium_value, rep.equilibrium_se) = mean_se(eq.payoff);
    double sign = player == 1 ? 1.0 : -1.0;
    rep.max_gain = -kInf;
    for (const auto& dev : deviations) {
        auto pair = strategies;
        (player == 1 ? pair.first : pair.second) = dev.strategy;
        PathOutcomes po = simulate_game(diffusion, payoffs, pair, x0, params);
        std::vector<double> diff(po.payoff.size());
        for (size_t i = 0; i < diff.size(); ++i) diff[i] = sign * (po.payoff[i] - eq.payoff[i]);
        auto [g, se] = mean_se(diff);
        DeviationEntry e{dev.label, mean_se(po.payoff).first, g, se};
        rep.entries.push_back(e);
        if (g > rep.max_gain) {
            rep.max_gain = g;
            rep.max_gain_se = se;
            rep.argmax = dev.label;
        }
    }
    return rep;
}

std::vector<Deviation> standard_deviations(const RandomizedStrategy& equilibrium, int player, double x0,
                                           double scale, double lo, double hi) {
    std::vector<Deviation> out;
    out.push_back({"immediate", RandomizedStrategy::stop_on(player, IntervalSet::interval(lo, hi))});
    out.push_back({"never", RandomizedStrategy::never(player)});
    for (double m : {1.0 / 16, 1.0 / 8, 1.0 / 4, 3.0 / 8, 1.0 / 2, 3.0 / 4, 1.0, 3.0 / 2}) {
        double s = scale * m;
        std::vector<Interval> parts;
        if (x0 - s > lo) parts.push_back({lo, x0 - s});
        if (x0 + s < hi) parts.push_back({x0 + s, hi});
        out.push_back({"exit-window " + std::to_string(s), RandomizedStrategy::stop_on(player, IntervalSet(parts))});
    }
    out.push_back({"rate-halved", equilibrium.scaled(0.5)});
    return out;
}

nlohmann::json report_to_json(const SimulationReport& r) {
    nlohmann::json j;
    j["x0"] = r.x0;
    j["estimate"] = r.estimate;
    j["std_error"] = r.std_error;
    j["counts"] = {{"p1_first", r.counts.p1_first},
                   {"p2_first", r.counts.p2_first},
                   {"simultaneous", r.counts.simultaneous},
                   {"horizon_censored", r.counts.horizon_censored}};
    j["outcome_means"] = {{"p1_first", r.mean_p1_first},
                          {"p2_first", r.mean_p2_first},
                          {"simultaneous", r.mean_simultaneous}};
    j["params"] = {{"dt", r.params.dt},
                   {"t_max", r.params.t_max},
                   {"band_halfwidth", r.params.band_halfwidth},
                   {"n_paths", r.params.n_paths},
                   {"seed", r.params.seed}};
    return j;
}

nlohmann::json deviation_to_json(const DeviationReport& r) {
    nlohmann::json j;
    j["player"] = r.player;
    j["x0"] = r.x0;
    j["equilibrium_value"] = r.equilibrium_value;
    j["equilibrium_se"] = r.equilibrium_se;
    j["max_gain"] = r.max_gain;
    j["max_gain_se"] = r.max_gain_se;
    j["argmax"] = r.argmax;
    auto entries = nlohmann::json::array();
    for (const auto& e : r.entries)
        entries.push_back({{"label", e.label}, {"value", e.value}, {"gain", e.gain}, {"std_error", e.std_error}});
    j["deviations"] = entries;
    return j;
}

}  // namespace dynkin
