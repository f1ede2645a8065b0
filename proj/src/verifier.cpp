#include "dynkin/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynkin/errors.hpp"
#include "dynkin/fd_operator.hpp"

namespace dynkin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double effective_rate(const DiffusionSpec& d) { return d.r > 0.0 ? d.r : kZeroRateRegularization; }

// Absolute residual tolerance in the units of A v, as in solve_value.
double residual_scale(const ObstacleProblem& p, double tol) {
    double obstacle = 1.0, op = 0.0;
    for (size_t i = 0; i < p.A.size(); ++i) {
        if (std::isfinite(p.lower[i])) obstacle = std::max(obstacle, std::fabs(p.lower[i]));
        if (std::isfinite(p.upper[i])) obstacle = std::max(obstacle, std::fabs(p.upper[i]));
        op = std::max(op, std::fabs(p.A.diag[i]));
    }
    return tol * op * obstacle;
}

size_t nearest_node(const std::vector<double>& xs, double x) {
    size_t i = static_cast<size_t>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin());
    if (i >= xs.size()) return xs.size() - 1;
    if (i > 0 && x - xs[i - 1] < xs[i] - x) return i - 1;
    return i;
}

ObstacleProblem response_problem(const std::vector<double>& xs, const RandomizedStrategy& opponent,
                                 const PayoffTriple& pay, const DiffusionSpec& d, int player) {
    size_t n = xs.size();
    std::vector<double> killing(n, 0.0), target(n), own(n), pinned_value(n);
    std::vector<bool> pinned(n);
    for (size_t i = 0; i < n; ++i) {
        double x = xs[i];
        double f = pay.f(x), g = pay.g(x), h = pay.h(x);
        // Refined stop-set ends carry roundoff; a node that close counts as inside.
        pinned[i] = opponent.stop_set.contains(x, 1e-3 * cell_width(xs, i));
        killing[i] = pinned[i] ? 0.0 : opponent.rate(x);
        target[i] = player == 1 ? g : f;
        own[i] = player == 1 ? f : g;
        pinned_value[i] = player == 1 ? std::max(g, h) : std::min(f, h);
    }
    for (const auto& a : opponent.atoms) {
        if (a.x < xs.front() || a.x > xs.back()) continue;
        size_t j = nearest_node(xs, a.x);
        double s = d.sigma(xs[j]);
        killing[j] += a.gamma * s * s / cell_width(xs, j);
    }
    ObstacleProblem p;
    p.A = build_generator(xs, d, effective_rate(d), killing);
    p.source.resize(n);
    p.lower.resize(n);
    p.upper.resize(n);
    for (size_t i = 0; i < n; ++i) {
        p.source[i] = killing[i] * target[i];
        if (pinned[i]) {
            p.lower[i] = p.upper[i] = pinned_value[i];
        } else if (player == 1) {
            p.lower[i] = own[i];
            p.upper[i] = kInf;
        } else {
            p.lower[i] = -kInf;
            p.upper[i] = own[i];
        }
    }
    p.left_value = pinned[0] ? pinned_value[0] : own[0];
    p.right_value = pinned[n - 1] ? pinned_value[n - 1] : own[n - 1];
    return p;
}

std::vector<double> every_second_node(const std::vector<double>& x) {
    std::vector<double> out;
    for (size_t i = 0; i < x.size(); i += 2) out.push_back(x[i]);
    if (out.back() != x.back()) out.push_back(x.back());
    return out;
}

// Refined region boundary between nodes a and b, or the midpoint if none was
// recorded.
double boundary_between(const RegionPartition& part, size_t a, size_t b) {
    double lo = part.grid[a], hi = part.grid[b];
    for (const auto& rb : part.boundaries)
        if (rb.x >= lo && rb.x <= hi) return rb.x;
    return 0.5 * (lo + hi);
}

struct Firing {
    bool fired = false;
    double x = 0.0;
    double margin = 0.0;
};

// One of the two stopping problems of the nonexistence test on the union of
// the given regions. sup_problem: maximize E[e^{-rt} f]; otherwise minimize
// E[e^{-rt} g].
Firing stopping_test(const PayoffTriple& pay, const DiffusionSpec& d, const RegionPartition& part,
                     std::initializer_list<Region> regions, bool sup_problem, double tol) {
    Firing best;
    const auto& grid = part.grid;
    size_t n = grid.size();
    size_t i = 0;
    while (i < n) {
        if (!part.has(i, regions)) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j + 1 < n && part.has(j + 1, regions)) ++j;

        // Sub-grid: limit points at proper component ends (Dirichlet with the
        // limit payoff), the grid end itself where the grid truncates the
        // component (reflecting, as the process would continue).
        std::vector<double> xs;
        if (i > 0) {
            double xb = boundary_between(part, i - 1, i);
            xs.push_back(xb);
        }
        for (size_t k = i; k <= j; ++k) {
            if (!xs.empty() && grid[k] - xs.back() <= 1e-9 * (grid[std::min(k + 1, n - 1)] - grid[k] + 1e-300))
                continue;
            xs.push_back(grid[k]);
        }
        if (j + 1 < n) {
            double xb = boundary_between(part, j, j + 1);
            if (xb - xs.back() <= 1e-9 * (grid[j + 1] - grid[j])) xs.pop_back();
            xs.push_back(xb);
        }
        const bool truncated_left = i == 0, truncated_right = j + 1 == n;
        i = j + 1;
        if (xs.size() < 3) continue;

        size_t m = xs.size();
        ObstacleProblem p;
        p.A = build_generator(xs, d, effective_rate(d));
        p.source.assign(m, 0.0);
        p.lower.assign(m, -kInf);
        p.upper.assign(m, kInf);
        for (size_t k = 0; k < m; ++k) {
            if (sup_problem) p.lower[k] = pay.f(xs[k]);
            else p.upper[k] = pay.g(xs[k]);
        }
        p.left_value = sup_problem ? pay.f(xs.front()) : pay.g(xs.front());
        p.right_value = sup_problem ? pay.f(xs.back()) : pay.g(xs.back());
        p.left_reflecting = truncated_left;
        p.right_reflecting = truncated_right;
        double rtol = residual_scale(p, kDefaultSolverTol);
        auto build = [&](const std::vector<size_t>& nodes) {
            ObstacleProblem q;
            std::vector<double> ys;
            for (size_t k : nodes) ys.push_back(xs[k]);
            q.A = build_generator(ys, d, effective_rate(d));
            q.source.assign(ys.size(), 0.0);
            q.lower.assign(ys.size(), -kInf);
            q.upper.assign(ys.size(), kInf);
            for (size_t k = 0; k < nodes.size(); ++k) {
                q.lower[k] = p.lower[nodes[k]];
                q.upper[k] = p.upper[nodes[k]];
            }
            q.left_value = p.left_value;
            q.right_value = p.right_value;
            q.left_reflecting = p.left_reflecting;
            q.right_reflecting = p.right_reflecting;
            return q;
        };
        ObstacleResult res = solve_obstacle_nested(m, build, rtol, 100000);

        for (size_t k = 1; k + 1 < m; ++k) {
            double f = pay.f(xs[k]), g = pay.g(xs[k]);
            double ref = sup_problem ? std::max(f, g) : std::min(f, g);
            double excess = sup_problem ? res.v[k] - ref : ref - res.v[k];
            double margin = excess - tol * (1.0 + std::fabs(ref));
            if (margin > 0.0 && (!best.fired || excess > best.margin)) {
                best.fired = true;
                best.x = xs[k];
                best.margin = excess;
            }
        }
    }
    return best;
}

}  // namespace

BestResponseSolution best_response_value(const RandomizedStrategy& opponent, const PayoffTriple& payoffs,
                                         const DiffusionSpec& diffusion, int player, double tol,
                                         const std::vector<double>* equilibrium_value) {
    if (player != 1 && player != 2) throw ValidationError("player must be 1 or 2");
    if (!(tol > 0.0)) throw ValidationError("best response tol must be > 0");
    const auto& x = diffusion.grid;
    size_t n = x.size();
    if (n < 3) throw ValidationError("grid needs at least 3 points");
    if (equilibrium_value && equilibrium_value->size() != n)
        throw ValidationError("equilibrium value does not match the grid");

    ObstacleProblem full = response_problem(x, opponent, payoffs, diffusion, player);
    double rtol = residual_scale(full, tol);
    auto build = [&](const std::vector<size_t>& nodes) {
        if (nodes.size() == n) return full;
        std::vector<double> xs;
        for (size_t k : nodes) xs.push_back(x[k]);
        return response_problem(xs, opponent, payoffs, diffusion, player);
    };
    ObstacleResult res = solve_obstacle_nested(n, build, rtol, 100000);

    BestResponseSolution out;
    out.player = player;
    out.grid = x;
    out.residual_tol = rtol;
    out.response_stop_mask.assign(n, false);
    NodeState stop_state = player == 1 ? NodeState::Lower : NodeState::Upper;
    for (size_t i = 1; i + 1 < n; ++i)
        out.response_stop_mask[i] = full.lower[i] != full.upper[i] && res.state[i] == stop_state;
    out.w = std::move(res.v);
    if (equilibrium_value) {
        out.gain.resize(n);
        out.max_gain = -kInf;
        for (size_t i = 0; i < n; ++i) {
            double v = (*equilibrium_value)[i];
            out.gain[i] = player == 1 ? out.w[i] - v : v - out.w[i];
            if (out.gain[i] > out.max_gain) {
                out.max_gain = out.gain[i];
                out.max_gain_x = x[i];
            }
        }
    }
    return out;
}

EquilibriumCheck check_equilibrium_gains(const SolvedProblem& problem,
                                         const std::pair<RandomizedStrategy, RandomizedStrategy>& strategies,
                                         double tol) {
    const auto& cfg = problem.config;
    const auto& V = problem.sol.v;
    auto b1 = best_response_value(strategies.second, cfg.payoffs, cfg.diffusion, 1, tol, &V);
    auto b2 = best_response_value(strategies.first, cfg.payoffs, cfg.diffusion, 2, tol, &V);

    ProblemConfig coarse = cfg;
    coarse.diffusion.grid = every_second_node(cfg.diffusion.grid);
    SolvedProblem cp = solve_problem(coarse);
    auto c1 = best_response_value(strategies.second, cfg.payoffs, coarse.diffusion, 1, tol, &cp.sol.v);
    auto c2 = best_response_value(strategies.first, cfg.payoffs, coarse.diffusion, 2, tol, &cp.sol.v);

    double vscale = 1.0;
    for (double v : V) vscale = std::max(vscale, std::fabs(v));
    EquilibriumCheck out;
    out.max_gain_p1 = b1.max_gain;
    out.max_gain_p2 = b2.max_gain;
    out.x_p1 = b1.max_gain_x;
    out.x_p2 = b2.max_gain_x;
    out.allowance_p1 = 2.0 * tol * vscale + std::fabs(b1.max_gain - c1.max_gain);
    out.allowance_p2 = 2.0 * tol * vscale + std::fabs(b2.max_gain - c2.max_gain);
    out.pass = out.max_gain_p1 <= out.allowance_p1 && out.max_gain_p2 <= out.allowance_p2;
    return out;
}

bool check_pure_ne_sufficient(const ValueSolution& sol, const RegionPartition& partition) {
    size_t n = sol.grid.size();
    if (partition.labels.size() != n) throw ValidationError("partition does not match the solution grid");
    for (size_t i = 0; i < n; ++i) {
        if (sol.d1_mask()[i] && partition.has(i, {Region::B3, Region::B6})) return false;
        if (sol.d2_mask()[i] && partition.has(i, {Region::B4, Region::B5})) return false;
    }
    return true;
}

PureNeVerdict check_pure_ne_nonexistence(const PayoffTriple& payoffs, const DiffusionSpec& diffusion,
                                         const RegionPartition& partition, double tol) {
    PureNeVerdict v;
    Firing a = stopping_test(payoffs, diffusion, partition, {Region::B4, Region::B5}, true, tol);
    Firing b = stopping_test(payoffs, diffusion, partition, {Region::B3, Region::B6}, false, tol);
    const Firing* hit = nullptr;
    if (a.fired) hit = &a;
    if (b.fired && (!hit || b.margin > hit->margin)) hit = &b;
    if (hit) {
        v.nonexistence_holds = true;
        v.witness_x = hit->x;
        v.condition = hit == &a ? "i" : "ii";
        v.margin = hit->margin;
    }
    v.inconclusive = !v.nonexistence_holds;
    return v;
}

PureNeVerdict pure_ne_verdict(const SolvedProblem& problem, double tol) {
    PureNeVerdict v = check_pure_ne_nonexistence(problem.config.payoffs, problem.config.diffusion,
                                                  problem.partition, tol);
    v.sufficient_holds = check_pure_ne_sufficient(problem.sol, problem.partition);
    v.inconclusive = !v.sufficient_holds && !v.nonexistence_holds;
    return v;
}

nlohmann::json verdict_to_json(const PureNeVerdict& v, const std::optional<EquilibriumCheck>& gains) {
    nlohmann::json j;
    j["sufficient"] = v.sufficient_holds;
    j["nonexistence"] = v.nonexistence_holds;
    j["inconclusive"] = v.inconclusive;
    j["witness_x"] = v.witness_x ? nlohmann::json(*v.witness_x) : nlohmann::json(nullptr);
    j["condition"] = v.condition.empty() ? nlohmann::json(nullptr) : nlohmann::json(v.condition);
    j["max_gain_p1"] = gains ? nlohmann::json(gains->max_gain_p1) : nlohmann::json(nullptr);
    j["max_gain_p2"] = gains ? nlohmann::json(gains->max_gain_p2) : nlohmann::json(nullptr);
    return j;
}

}  // namespace dynkin
