#include "dynkin/regression.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "dynkin/io.hpp"
#include "dynkin/obstacle_solver.hpp"
#include "dynkin/simulator.hpp"
#include "dynkin/verifier.hpp"

namespace dynkin {

const std::vector<std::string> kRegressionChecks = {"value",     "randomization", "threshold",
                                                    "mc_value",  "deviation",     "martingale",
                                                    "verdict",   "oracle"};

std::pair<RandomizedStrategy, RandomizedStrategy> equilibrium_strategies(const SolvedProblem& problem,
                                                                         double epsilon) {
    const auto& cfg = problem.config;
    if (check_simplified_condition(problem.partition))
        return build_nash_strategies(problem.sol, problem.partition, cfg.payoffs, cfg.diffusion);
    auto e = calibrate_epsilon_strategies(problem.sol, problem.partition, cfg.payoffs, cfg.diffusion, epsilon);
    return {std::move(e.p1), std::move(e.p2)};
}

bool ExampleRegression::pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

const CheckResult* ExampleRegression::find(const std::string& key) const {
    for (const auto& c : checks)
        if (c.key == key) return &c;
    return nullptr;
}

namespace {

CheckResult make_check(std::string key, double value, double threshold, std::string detail = {}) {
    return {std::move(key), value, threshold, value <= threshold, std::move(detail)};
}

double relative_error(double got, double want) {
    double d = std::fabs(got - want);
    return want == 0.0 ? d : d / std::fabs(want);
}

SimParams sim_params(const SimSettings& s, double dt, size_t paths, std::uint64_t seed) {
    SimParams p;
    p.dt = dt;
    p.t_max = s.t_max;
    p.band_halfwidth = s.band_halfwidth;
    p.n_paths = paths;
    p.seed = seed;
    return p;
}

}  // namespace

ExampleRegression run_regression(const Example& ex, const RegressionOptions& opts) {
    ExampleRegression out;
    out.id = ex.id;
    const auto& cfg = ex.config;
    const auto& d = cfg.diffusion;

    auto t0 = std::chrono::steady_clock::now();
    SolvedProblem s = solve_problem(cfg);
    out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (ex.exact_value) {
        double err = 0.0;
        for (size_t i = 0; i < d.grid.size(); ++i)
            err = std::max(err, std::fabs(s.sol.v[i] - ex.exact_value(d.grid[i])));
        out.checks.push_back(make_check("value", err, ex.value_tol, "sup |v - exact| over the grid"));
    }

    const bool explicit_eq = check_simplified_condition(s.partition);
    const double eps = ex.deviation_epsilon > 0.0 ? ex.deviation_epsilon : cfg.epsilon;
    std::optional<std::pair<RandomizedStrategy, RandomizedStrategy>> strategies;
    auto get_strategies = [&]() -> const std::pair<RandomizedStrategy, RandomizedStrategy>& {
        if (!strategies) strategies = equilibrium_strategies(s, eps);
        return *strategies;
    };

    if (ex.exact_randomization && explicit_eq) {
        const auto& er = *ex.exact_randomization;
        const auto& st = er.player == 1 ? get_strategies().first : get_strategies().second;
        double worst = 0.0;
        for (double x : er.points) worst = std::max(worst, relative_error(st.rate(x), er.rate(x)));
        bool atoms_match = st.atoms.size() == er.atoms.size();
        for (size_t k = 0; atoms_match && k < er.atoms.size(); ++k) {
            worst = std::max(worst, std::fabs(st.atoms[k].x - er.atoms[k].x));
            worst = std::max(worst, relative_error(st.atoms[k].gamma, er.atoms[k].gamma));
        }
        if (!atoms_match) worst = std::numeric_limits<double>::infinity();
        out.checks.push_back(make_check("randomization", worst, 1e-12, "rates and atoms, relative"));
    }

    if (ex.exact_threshold) {
        double err = std::numeric_limits<double>::infinity();
        for (double b : s.sol.stops.d1_boundaries) err = std::min(err, std::fabs(std::fabs(b) - *ex.exact_threshold));
        out.checks.push_back(make_check("threshold", err, 1e-3, "nearest D1 boundary vs exact threshold"));
    }

    if (opts.simulate && ex.mc_x0) {
        double x0 = *ex.mc_x0;
        SimParams p = sim_params(cfg.sim, opts.mc_dt.value_or(cfg.sim.dt), opts.mc_paths.value_or(cfg.sim.n_paths),
                                 opts.seed.value_or(cfg.sim.seed));
        auto rep = run_game(d, cfg.payoffs, get_strategies(), x0, p);
        double v = ex.exact_value ? ex.exact_value(x0) : s.sol.value_at(x0);
        double gap = std::fabs(rep.estimate - v);
        out.checks.push_back(make_check("mc_value", gap, 3.0 * rep.std_error + 0.02,
                                        "estimate " + format_double(rep.estimate) + " se " +
                                            format_double(rep.std_error) + " V " + format_double(v)));
    }

    if (opts.simulate && !ex.deviation_x0.empty()) {
        SimParams p = sim_params(cfg.sim, opts.deviation_dt.value_or(ex.deviation_dt),
                                 opts.deviation_paths.value_or(ex.deviation_paths), opts.seed.value_or(cfg.sim.seed));
        const double allowed_eps = explicit_eq ? 0.0 : eps;
        double worst = -std::numeric_limits<double>::infinity();
        std::string where;
        for (double x0 : ex.deviation_x0) {
            for (int player : {1, 2}) {
                const auto& own = player == 1 ? get_strategies().first : get_strategies().second;
                auto devs = standard_deviations(own, player, x0, ex.deviation_scale, d.lo(), d.hi());
                auto rep = estimate_deviation_gain(d, cfg.payoffs, get_strategies(), devs, player, x0, p);
                double excess = rep.max_gain - (allowed_eps + 3.0 * rep.max_gain_se + 0.02);
                if (excess > worst) {
                    worst = excess;
                    where = "x0 " + format_double(x0) + " player " + std::to_string(player) + " " + rep.argmax;
                }
            }
        }
        out.checks.push_back(make_check("deviation", worst, 0.0, "worst gain minus allowance at " + where));
    }

    {
        auto rep = verify_martingale_conditions(s.sol, d, martingale_tolerance(s.sol));
        out.checks.push_back(make_check("martingale", static_cast<double>(rep.failures), 0.0, "failing nodes"));
    }

    if (ex.verdict != ExpectedVerdict::Unspecified) {
        auto v = pure_ne_verdict(s);
        ExpectedVerdict got = v.sufficient_holds     ? ExpectedVerdict::Sufficient
                              : v.nonexistence_holds ? ExpectedVerdict::Nonexistence
                                                     : ExpectedVerdict::Inconclusive;
        bool both = v.sufficient_holds && v.nonexistence_holds;
        bool ok = got == ex.verdict && !both;
        out.checks.push_back(make_check("verdict", ok ? 0.0 : 1.0, 0.0,
                                        "got " + verdict_name(got) + ", expected " + verdict_name(ex.verdict)));
    }

    if (ex.oracle_check) {
        std::vector<double> states;
        auto orc = brute_force_oracle(s.assoc, d, 200, 0.0, &states);
        double err = 0.0;
        for (size_t j = 0; j < states.size(); ++j) err = std::max(err, std::fabs(orc[j] - s.sol.value_at(states[j])));
        out.checks.push_back(make_check("oracle", err, 2e-2, "200-state chain, sup norm"));
    }
    return out;
}

std::string regression_summary_csv(const std::vector<ExampleRegression>& runs) {
    std::string out = "id,v_sup_error,mc_gap,deviation_excess";
    for (const auto& k : kRegressionChecks) out += "," + k;
    out += ",pass\n";
    auto number = [](const ExampleRegression& r, const std::string& key) -> std::string {
        const CheckResult* c = r.find(key);
        return c ? format_double(c->value) : "";
    };
    for (const auto& r : runs) {
        out += r.id + "," + number(r, "value") + "," + number(r, "mc_value") + "," + number(r, "deviation");
        for (const auto& k : kRegressionChecks) {
            const CheckResult* c = r.find(k);
            out += ",";
            if (c) out += c->pass ? "pass" : "fail";
        }
        out += r.pass() ? ",pass\n" : ",fail\n";
    }
    return out;
}

nlohmann::json regression_to_json(const ExampleRegression& run) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : run.checks)
        checks.push_back({{"check", c.key},
                          {"value", c.value},
                          {"threshold", c.threshold},
                          {"pass", c.pass},
                          {"detail", c.detail}});
    return {{"id", run.id}, {"solve_seconds", run.solve_seconds}, {"pass", run.pass()}, {"checks", checks}};
}

}  // namespace dynkin
