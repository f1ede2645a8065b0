#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numeric>

#include "dynkin/errors.hpp"
#include "dynkin/examples.hpp"
#include "dynkin/pipeline.hpp"
#include "dynkin/simulator.hpp"

using namespace dynkin;

namespace {

DiffusionSpec brownian(double mu, double sigma, double r, double lo, double hi) {
    DiffusionSpec d;
    d.mu = PiecewiseFn::constant(mu);
    d.sigma = PiecewiseFn::constant(sigma);
    d.r = r;
    d.grid = make_grid(lo, hi, 2001);
    return d;
}

struct Game {
    Example ex;
    SolvedProblem solved;
    std::pair<RandomizedStrategy, RandomizedStrategy> nash;
};

Game nash_game(const std::string& id) {
    Game g{find_example(id), {}, {}};
    g.solved = solve_problem(g.ex.config);
    g.nash = build_nash_strategies(g.solved.sol, g.solved.partition, g.ex.config.payoffs, g.ex.config.diffusion);
    return g;
}

SimParams params(double dt, size_t n, std::uint64_t seed = 7) {
    SimParams p;
    p.dt = dt;
    p.n_paths = n;
    p.seed = seed;
    return p;
}

}  // namespace

TEST_CASE("zero volatility and drift keep paths constant") {
    auto d = brownian(0.0, 0.0, 0.1, -1, 1);
    SimParams p = params(1e-2, 3);
    p.t_max = 1.0;
    auto batch = simulate_paths(d, 0.25, p);
    CHECK(batch.steps() == 100);
    for (size_t i = 0; i < batch.size(); ++i)
        for (double x : batch.path(i)) CHECK(x == 0.25);
}

TEST_CASE("Brownian motion with drift has the right moments at t = 1") {
    auto d = brownian(0.5, 2.0, 0.1, -100, 100);
    SimParams p = params(1e-2, 20000);
    p.t_max = 1.0;
    auto batch = simulate_paths(d, 0.0, p);
    double s = 0, s2 = 0;
    for (size_t i = 0; i < batch.size(); ++i) {
        double x = batch.path(i).back();
        s += x;
        s2 += x * x;
    }
    double n = static_cast<double>(batch.size());
    double mean = s / n, var = s2 / n - mean * mean;
    CHECK(std::fabs(mean - 0.5) < 4 * 2.0 / std::sqrt(n));
    CHECK(std::fabs(var - 4.0) < 4 * 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("doubling sigma scales increments by two") {
    auto d1 = brownian(0.0, 1.0, 0.1, -100, 100);
    auto d2 = brownian(0.0, 2.0, 0.1, -100, 100);
    SimParams p = params(1e-2, 5);
    p.t_max = 0.5;
    auto a = simulate_paths(d1, 0.0, p), b = simulate_paths(d2, 0.0, p);
    for (size_t i = 0; i < a.size(); ++i) {
        auto pa = a.path(i), pb = b.path(i);
        for (size_t k = 0; k < pa.size(); ++k) CHECK(pb[k] == doctest::Approx(2.0 * pa[k]).epsilon(1e-12));
    }
}

TEST_CASE("paths stay inside a reflecting domain") {
    auto d = brownian(0.0, 1.0, 0.1, -0.1, 0.1);
    SimParams p = params(1e-3, 50);
    p.t_max = 1.0;
    auto batch = simulate_paths(d, 0.0, p);
    for (size_t i = 0; i < batch.size(); ++i)
        for (double x : batch.path(i)) CHECK((x >= -0.1 && x <= 0.1));
}

TEST_CASE("band local time of Brownian motion at its start") {
    auto d = brownian(0.0, 1.0, 0.1, -50, 50);
    SimParams p = params(1e-4, 2000);
    p.t_max = 1.0;
    p.band_halfwidth = 0.01;
    auto batch = simulate_paths(d, 0.0, p);
    double total = 0;
    for (size_t i = 0; i < batch.size(); ++i) {
        auto dl = approx_local_time(batch.path(i), 0.0, d, p);
        total += std::accumulate(dl.begin(), dl.end(), 0.0);
    }
    // E[l_1^0] = sqrt(2/pi).
    double expected = std::sqrt(2.0 / M_PI);
    CHECK(std::fabs(total / batch.size() - expected) < 0.1 * expected);
}

TEST_CASE("default band follows sqrt(dt) and the grid spacing") {
    auto d = brownian(0.0, 1.0, 0.1, -1, 1);
    CHECK(local_time_band(d, 0.0, params(1e-2, 1)) == doctest::Approx(0.2));
    CHECK(local_time_band(d, 0.0, params(1e-8, 1)) == doctest::Approx(d.min_spacing()));
}

TEST_CASE("immediate stops pay f, g or h at the start") {
    auto g = nash_game("ex_4_4");
    const auto& pay = g.ex.config.payoffs;
    const auto& d = g.ex.config.diffusion;
    IntervalSet all = IntervalSet::interval(d.lo(), d.hi());
    auto p1 = RandomizedStrategy::stop_on(1, all);
    auto p2 = RandomizedStrategy::stop_on(2, all);
    const double x0 = 0.7;
    auto only1 = run_game(d, pay, {p1, RandomizedStrategy::never(2)}, x0, params(1e-3, 50));
    CHECK(only1.estimate == doctest::Approx(pay.f(x0)));
    CHECK(only1.counts.p1_first == 50);
    auto only2 = run_game(d, pay, {RandomizedStrategy::never(1), p2}, x0, params(1e-3, 50));
    CHECK(only2.estimate == doctest::Approx(pay.g(x0)));
    auto both = run_game(d, pay, {p1, p2}, x0, params(1e-3, 50));
    CHECK(both.estimate == doctest::Approx(pay.h(x0)));
    CHECK(both.counts.simultaneous == 50);
}

TEST_CASE("pure equilibrium value of ex_4_2") {
    auto g = nash_game("ex_4_2");
    auto rep = run_game(g.ex.config.diffusion, g.ex.config.payoffs, g.nash, 0.5, params(1e-3, 2000));
    CHECK(std::fabs(rep.estimate - 1.5) <= 3 * rep.std_error + 0.02);
    CHECK(rep.hazard_decreases == 0);
}

TEST_CASE("randomized equilibrium value of ex_4_4") {
    auto g = nash_game("ex_4_4");
    auto rep = run_game(g.ex.config.diffusion, g.ex.config.payoffs, g.nash, 1.0, params(1e-3, 4000));
    double v = g.ex.exact_value(1.0);
    CHECK(std::fabs(rep.estimate - v) <= 3 * rep.std_error + 0.02);
    CHECK(rep.hazard_decreases == 0);
    CHECK(rep.counts.total() == 4000);
    double bound = 0;
    for (double x : g.ex.config.diffusion.grid)
        bound = std::max({bound, std::fabs(g.ex.config.payoffs.f(x)), std::fabs(g.ex.config.payoffs.g(x)),
                          std::fabs(g.ex.config.payoffs.h(x))});
    CHECK(rep.max_abs_payoff <= bound + 1e-12);
}

TEST_CASE("constant clocks against constant payoffs") {
    auto d = brownian(0.0, 1.0, 0.1, -5, 5);
    PayoffTriple pay{PiecewiseFn::constant(1.0), PiecewiseFn::constant(3.0), PiecewiseFn::constant(2.0)};
    IntervalSet all = IntervalSet::interval(d.lo(), d.hi());
    auto clock = [&](int player, double rate) {
        RandomizedStrategy s = RandomizedStrategy::never(player);
        s.rates.push_back({all, [rate](double) { return rate; }, "constant"});
        return s;
    };
    auto rep = run_game(d, pay, {clock(1, 1.0), clock(2, 2.0)}, 0.0, params(1e-3, 4000));
    // First ring of two exponential clocks, discounted at r.
    double exact = (1.0 * 1.0 + 2.0 * 3.0) / (1.0 + 2.0 + 0.1);
    CHECK(std::fabs(rep.estimate - exact) <= 3 * rep.std_error + 0.02);
    // Absolutely continuous clocks almost never ring together.
    CHECK(static_cast<double>(rep.counts.simultaneous) < 0.01 * rep.counts.total());
    CHECK(rep.hazard_decreases == 0);
}

TEST_CASE("identical seeds give identical reports") {
    auto g = nash_game("ex_4_4");
    auto a = run_game(g.ex.config.diffusion, g.ex.config.payoffs, g.nash, 1.0, params(1e-3, 500, 99));
    auto b = run_game(g.ex.config.diffusion, g.ex.config.payoffs, g.nash, 1.0, params(1e-3, 500, 99));
    CHECK(report_to_json(a).dump() == report_to_json(b).dump());
    auto c = run_game(g.ex.config.diffusion, g.ex.config.payoffs, g.nash, 1.0, params(1e-3, 500, 100));
    CHECK(c.estimate != a.estimate);
}

TEST_CASE("worker count does not change results") {
    auto g = nash_game("ex_4_2");
    const char* old = std::getenv("DYNKIN_THREADS");
    std::string saved = old ? old : "";
    setenv("DYNKIN_THREADS", "1", 1);
    auto a = simulate_game(g.ex.config.diffusion, g.ex.config.payoffs, g.nash, 0.0, params(1e-3, 300, 5));
    setenv("DYNKIN_THREADS", "3", 1);
    auto b = simulate_game(g.ex.config.diffusion, g.ex.config.payoffs, g.nash, 0.0, params(1e-3, 300, 5));
    if (old) setenv("DYNKIN_THREADS", saved.c_str(), 1);
    else unsetenv("DYNKIN_THREADS");
    CHECK(a.payoff == b.payoff);
    CHECK(a.outcome == b.outcome);
}

TEST_CASE("zero discount without forced termination is refused") {
    auto d = brownian(0.0, 1.0, 0.0, -1, 1);
    PayoffTriple pay{PiecewiseFn::parse("x"), PiecewiseFn::parse("x+2"), PiecewiseFn::parse("x+1")};
    std::pair<RandomizedStrategy, RandomizedStrategy> pair{RandomizedStrategy::never(1),
                                                           RandomizedStrategy::never(2)};
    CHECK_THROWS_AS(run_game(d, pay, pair, 0.0, params(1e-3, 10)), PreconditionFailure);
}

TEST_CASE("invalid parameters are rejected") {
    SimParams bad_dt = params(0.0, 10);
    bad_dt.t_max = 1.0;
    CHECK_THROWS_AS(bad_dt.validate(), ValidationError);
    SimParams no_paths = params(1e-3, 0);
    no_paths.t_max = 1.0;
    CHECK_THROWS_AS(no_paths.validate(), ValidationError);
    SimParams short_horizon = params(1e-2, 10);
    short_horizon.t_max = 1e-3;
    CHECK_THROWS_AS(short_horizon.validate(), ValidationError);
}

TEST_CASE("self deviation gains nothing") {
    auto g = nash_game("ex_4_4");
    std::vector<Deviation> devs{{"self", g.nash.second}};
    auto rep = estimate_deviation_gain(g.ex.config.diffusion, g.ex.config.payoffs, g.nash, devs, 2, 1.0,
                                       params(1e-3, 500));
    CHECK(rep.entries.at(0).gain == 0.0);
}

TEST_CASE("refusing to stop near the origin hurts the minimizer in ex_4_2") {
    auto g = nash_game("ex_4_2");
    // Player 2 stops only outside (-1, 1): V(0) = 1 rises because the atom is gone.
    const auto& d = g.ex.config.diffusion;
    auto lazy = RandomizedStrategy::stop_on(2, IntervalSet::interval(d.lo(), -1.0).unite(
                                                   IntervalSet::interval(1.0, d.hi())));
    std::vector<Deviation> devs{{"no atom", lazy}};
    auto rep = estimate_deviation_gain(d, g.ex.config.payoffs, g.nash, devs, 2, 0.0, params(1e-3, 2000));
    CHECK(rep.entries.at(0).gain <= 3 * rep.entries.at(0).std_error);
}

TEST_CASE("standard deviation family") {
    auto g = nash_game("ex_4_2");
    auto devs = standard_deviations(g.nash.first, 1, 0.0, 1.0, -3, 3);
    CHECK(devs.size() == 11);
    CHECK(devs.front().label == "immediate");
    CHECK(devs[1].label == "never");
    CHECK(devs.back().label == "rate-halved");
    CHECK(devs[2].strategy.stop_set.contains(0.1));
    CHECK_FALSE(devs[2].strategy.stop_set.contains(0.0));
}

TEST_CASE("scaling equilibrium rates by two keeps deviation gains small in ex_4_3") {
    auto g = nash_game("ex_4_3");
    const auto& d = g.ex.config.diffusion;
    std::pair<RandomizedStrategy, RandomizedStrategy> scaled{g.nash.first.scaled(2.0), g.nash.second.scaled(2.0)};
    for (int player : {1, 2}) {
        const auto& own = player == 1 ? scaled.first : scaled.second;
        auto devs = standard_deviations(own, player, 0.0, g.ex.deviation_scale, d.lo(), d.hi());
        auto rep = estimate_deviation_gain(d, g.ex.config.payoffs, scaled, devs, player, 0.0, params(1e-3, 1500));
        CHECK(rep.max_gain <= 3 * rep.max_gain_se + 0.02);
    }
}

TEST_CASE("report JSON layout") {
    auto g = nash_game("ex_4_2");
    auto rep = run_game(g.ex.config.diffusion, g.ex.config.payoffs, g.nash, 0.5, params(1e-3, 20));
    auto j = report_to_json(rep);
    CHECK(j.contains("estimate"));
    CHECK(j.contains("std_error"));
    CHECK(j["counts"]["p1_first"].get<size_t>() + j["counts"]["p2_first"].get<size_t>() +
              j["counts"]["simultaneous"].get<size_t>() + j["counts"]["horizon_censored"].get<size_t>() ==
          20);
}

TEST_CASE("pure equilibrium of ex_5_2 resists the deviation family") {
    auto ex = find_example("ex_5_2");
    auto s = solve_problem(ex.config);
    const auto& d = ex.config.diffusion;
    std::pair<RandomizedStrategy, RandomizedStrategy> pure{RandomizedStrategy::stop_on(1, s.sol.stops.d1_set),
                                                           RandomizedStrategy::stop_on(2, s.sol.stops.d2_set)};
    const double b = quadratic_threshold(0.1);
    for (int player : {1, 2}) {
        const auto& own = player == 1 ? pure.first : pure.second;
        auto devs = standard_deviations(own, player, 0.0, b, d.lo(), d.hi());
        auto rep = estimate_deviation_gain(d, ex.config.payoffs, pure, devs, player, 0.0, params(1e-2, 1000));
        CAPTURE(player);
        CAPTURE(rep.argmax);
        CHECK(rep.max_gain <= 3 * rep.max_gain_se + 0.02);
    }
}
