#include "dynkin/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynkin/errors.hpp"

namespace dynkin {

double RandomizedStrategy::rate(double x) const {
    if (rates.empty() || stop_set.interior_contains(x)) return 0.0;
    double best = 0.0;
    for (const auto& t : rates)
        if (t.support.contains(x)) best = std::max(best, t.density(x));
    return best;
}

RandomizedStrategy RandomizedStrategy::scaled(double c) const {
    if (!(c >= 0.0)) throw ValidationError("scale factor must be >= 0");
    RandomizedStrategy s = *this;
    for (auto& t : s.rates) {
        auto base = t.density;
        t.density = [base, c](double x) { return c * base(x); };
    }
    for (auto& a : s.atoms) a.gamma *= c;
    return s;
}

RandomizedStrategy RandomizedStrategy::never(int player) {
    RandomizedStrategy s;
    s.player = player;
    return s;
}

RandomizedStrategy RandomizedStrategy::stop_on(int player, IntervalSet set) {
    RandomizedStrategy s;
    s.player = player;
    s.stop_set = std::move(set);
    return s;
}

bool check_simplified_condition(const RegionPartition& partition) {
    return !partition.any({Region::B5, Region::B6});
}

namespace {

// ((L - r) w / (w - o))_+ where the strict ordering `in_region` holds, zero
// at kinks of w.
std::function<double(double)> nash_density(const PiecewiseFn& w, const PiecewiseFn& o, const PayoffTriple& pay,
                                           const DiffusionSpec& diffusion, bool player1) {
    PiecewiseFn mu = diffusion.mu, sigma = diffusion.sigma;
    double r = diffusion.r;
    PayoffTriple p = pay;
    return [w, o, p, mu, sigma, r, player1](double x) {
        double f = p.f(x), g = p.g(x), h = p.h(x);
        bool in_region = player1 ? (h < g && g < f) : (g < f && f < h);
        if (!in_region || w.is_kink(x)) return 0.0;
        Jet j = w.jet(x);
        double s = sigma(x);
        double gen = mu(x) * j.d1 + 0.5 * s * s * j.d2 - r * j.v;
        double den = j.v - o(x);
        if (den == 0.0) return 0.0;
        return std::max(0.0, gen / den);
    };
}

}  // namespace

std::pair<RandomizedStrategy, RandomizedStrategy> build_nash_strategies(const ValueSolution& sol,
                                                                         const RegionPartition& partition,
                                                                         const PayoffTriple& payoffs,
                                                                         const DiffusionSpec& diffusion) {
    if (!check_simplified_condition(partition))
        throw HypothesisViolated("explicit equilibrium needs B5 and B6 empty");
    double lo = partition.grid.front(), hi = partition.grid.back();

    auto build = [&](int player) {
        bool p1 = player == 1;
        Region carrier = p1 ? Region::B3 : Region::B4;
        const PiecewiseFn& w = p1 ? payoffs.g : payoffs.f;
        const PiecewiseFn& o = p1 ? payoffs.f : payoffs.g;
        const IntervalSet& d = p1 ? sol.stops.d1_set : sol.stops.d2_set;
        RandomizedStrategy s;
        s.player = player;
        s.stop_set = d.subtract(partition.open_region_set({carrier})).clip(lo, hi);
        IntervalSet support = partition.region_set({carrier});
        if (support.empty()) return s;
        s.rates.push_back({support, nash_density(w, o, payoffs, diffusion, p1), p1 ? "nash-g" : "nash-f"});
        for (const auto& k : w.kinks()) {
            if (k.x <= lo || k.x >= hi) continue;
            double f = payoffs.f(k.x), g = payoffs.g(k.x), h = payoffs.h(k.x);
            bool in_region = p1 ? (h < g && g < f) : (g < f && f < h);
            if (!in_region) continue;
            double gamma = 0.5 * (k.right_slope - k.left_slope) / (w(k.x) - o(k.x));
            if (gamma > 0.0) s.atoms.push_back({k.x, gamma});
        }
        return s;
    };
    return {build(1), build(2)};
}

std::pair<double, double> exit_interval(double x, double d, const PayoffTriple& payoffs,
                                        const DiffusionSpec& diffusion) {
    if (!(d > 0.0)) throw ValidationError("exit_interval: d must be > 0");
    double lo = diffusion.lo(), hi = diffusion.hi();
    if (!(x >= lo && x <= hi)) throw ValidationError("exit_interval: x outside the state range");
    double f0 = payoffs.f(x), g0 = payoffs.g(x);
    auto ok = [&](double y) { return std::fabs(payoffs.f(y) - f0) <= d && std::fabs(payoffs.g(y) - g0) <= d; };
    double max_step = (hi - lo) / 64.0;

    auto scan = [&](int dir) {
        double bound = dir > 0 ? hi : lo;
        double y = x;
        while (y != bound) {
            double slope = std::max(std::fabs(payoffs.f.one_sided(y, dir).d1),
                                    std::fabs(payoffs.g.one_sided(y, dir).d1));
            double step = slope > 0.0 ? 0.25 * d / slope : max_step;
            step = std::clamp(step, 1e-13 * (1.0 + std::fabs(y)), max_step);
            double z = dir > 0 ? std::min(y + step, bound) : std::max(y - step, bound);
            if (!ok(z)) {
                double good = y, bad = z;
                for (int it = 0; it < 200; ++it) {
                    double mid = 0.5 * (good + bad);
                    if (mid == good || mid == bad) break;
                    (ok(mid) ? good : bad) = mid;
                }
                return good;
            }
            y = z;
        }
        return bound;
    };
    double a = scan(-1), b = scan(+1);
    if (!(a < b)) throw DegenerateInterval("no exit interval of positive width at x=" + std::to_string(x));
    return {a, b};
}

nlohmann::json strategy_to_json(const RandomizedStrategy& s, const std::vector<double>& grid) {
    nlohmann::json j;
    j["player"] = s.player;
    auto intervals = nlohmann::json::array();
    for (const auto& c : s.stop_set.intervals()) intervals.push_back({c.lo, c.hi});
    j["stop_intervals"] = intervals;
    j["stop_points"] = s.stop_set.isolated_points();
    auto samples = nlohmann::json::array();
    size_t stride = std::max<size_t>(1, grid.size() / 2000);
    for (size_t i = 0; i < grid.size(); i += stride) samples.push_back({grid[i], s.rate(grid[i])});
    if (!grid.empty() && (grid.size() - 1) % stride != 0) samples.push_back({grid.back(), s.rate(grid.back())});
    j["rate_samples"] = samples;
    auto atoms = nlohmann::json::array();
    for (const auto& a : s.atoms) atoms.push_back({a.x, a.gamma});
    j["atoms"] = atoms;
    j["epsilon"] = s.epsilon ? nlohmann::json(*s.epsilon) : nlohmann::json(nullptr);
    return j;
}

}  // namespace dynkin
