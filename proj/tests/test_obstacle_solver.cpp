#include <doctest.h>

#include <cmath>
#include <random>

#include "dynkin/associated_game.hpp"
#include "dynkin/errors.hpp"
#include "dynkin/examples.hpp"
#include "dynkin/obstacle_solver.hpp"

using namespace dynkin;

namespace {

struct Solved {
    Example ex;
    RegionPartition part;
    AssociatedPayoffs assoc;
    ValueSolution sol;
};

Solved solve_example(const std::string& id) {
    Solved s{find_example(id), {}, {}, {}};
    s.part = classify_regions(s.ex.config.payoffs, s.ex.config.diffusion.grid);
    s.assoc = build_associated_payoffs(s.ex.config.payoffs, s.part);
    s.sol = solve_value(s.assoc, s.ex.config.diffusion);
    return s;
}

AssociatedPayoffs arrays(std::vector<double> grid, std::vector<double> f, std::vector<double> g) {
    AssociatedPayoffs a;
    a.grid = std::move(grid);
    a.f_tilde = std::move(f);
    a.g_tilde = std::move(g);
    a.source_tag.assign(a.grid.size(), SourceTag::Ordered);
    return a;
}

DiffusionSpec wiener(double r, const std::vector<double>& grid) {
    DiffusionSpec d;
    d.r = r;
    d.grid = grid;
    return d;
}

}  // namespace

TEST_CASE("thomas solver") {
    std::vector<double> a{0, 1, 1}, b{4, 4, 4}, c{1, 1, 0}, d{5, 6, 5};
    auto x = thomas_solve(a, b, c, d);
    for (double v : x) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("ex_4_4 continuation value matches the closed form") {
    auto s = solve_example("ex_4_4");
    double err = 0.0;
    for (size_t i = 0; i < s.sol.grid.size(); ++i) {
        double x = s.sol.grid[i];
        if (x > 0 && x < 2) err = std::max(err, std::fabs(s.sol.v[i] - s.ex.exact_value(x)));
    }
    CHECK(err <= 1e-3);
    // Stopping sets: everything outside (0, 2).
    const auto& d1 = s.sol.stops.d1_set;
    const auto& d2 = s.sol.stops.d2_set;
    CHECK(d1.contains(-2.0));
    CHECK(d1.contains(0.0, 1e-9));
    CHECK(!d1.contains(1.0));
    CHECK(d1.contains(3.0));
    CHECK(d2.contains(-0.5));
    CHECK(!d2.contains(1.0));
    REQUIRE(s.sol.stops.d1_boundaries.size() == 2);
    CHECK(s.sol.stops.d1_boundaries[0] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(s.sol.stops.d1_boundaries[1] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("pinched obstacles return the obstacle") {
    auto grid = make_grid(-2, 2, 101);
    std::vector<double> f(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) f[i] = std::sin(grid[i]) + grid[i] * grid[i];
    auto a = arrays(grid, f, f);
    auto sol = solve_value(a, wiener(0.1, grid));
    for (size_t i = 0; i < grid.size(); ++i) CHECK(sol.v[i] == f[i]);
    auto ex42 = solve_example("ex_4_2");
    for (size_t i = 0; i < ex42.sol.grid.size(); ++i) {
        CHECK(ex42.sol.d1_mask()[i]);
        CHECK(ex42.sol.d2_mask()[i]);
    }
}

TEST_CASE("ex_5_1 threshold and value") {
    auto s = solve_example("ex_5_1");
    double b = quadratic_threshold(0.1);
    CHECK(std::fabs(b - 4.61823) <= 1e-5);
    REQUIRE(s.sol.stops.d1_boundaries.size() == 2);
    CHECK(std::fabs(s.sol.stops.d1_boundaries[0] + b) <= 1e-3);
    CHECK(std::fabs(s.sol.stops.d1_boundaries[1] - b) <= 1e-3);
    CHECK(s.sol.stops.d2_set.empty());
    double err = 0.0;
    for (size_t i = 0; i < s.sol.grid.size(); ++i)
        err = std::max(err, std::fabs(s.sol.v[i] - s.ex.exact_value(s.sol.grid[i])));
    CHECK(err <= 1e-3);
}

TEST_CASE("solution invariants on the corpus") {
    for (const auto& e : register_examples()) {
        auto s = solve_example(e.id);
        CAPTURE(e.id);
        for (size_t i = 0; i < s.sol.grid.size(); ++i) {
            CHECK(s.sol.v[i] >= s.assoc.f_tilde[i]);
            CHECK(s.sol.v[i] <= s.assoc.g_tilde[i]);
            if (s.part.b_g_le_f[i]) {
                CHECK(s.sol.d1_mask()[i]);
                CHECK(s.sol.d2_mask()[i]);
            }
            bool both = s.sol.d1_mask()[i] && s.sol.d2_mask()[i];
            bool pinched = std::fabs(s.assoc.g_tilde[i] - s.assoc.f_tilde[i]) <= 1e-7 * (1 + std::fabs(s.sol.v[i]));
            CHECK(both == pinched);
        }
        CHECK(s.sol.max_residual <= s.sol.residual_tol);
        auto rep = verify_martingale_conditions(s.sol, e.config.diffusion, 1e-6 * (1.0 + 1e3));
        CHECK(rep.pass);
    }
}

TEST_CASE("martingale check flags a forced violation") {
    auto s = solve_example("ex_5_1");
    ValueSolution bad = s.sol;
    bad.v = s.assoc.f_tilde;
    bad.stops.d1_mask.assign(bad.v.size(), true);
    bad.stops.d2_mask.assign(bad.v.size(), false);
    auto rep = verify_martingale_conditions(bad, s.ex.config.diffusion, 1e-6);
    CHECK(!rep.pass);
    CHECK(rep.worst_super > 0.5);
}

TEST_CASE("closed-form continuation value has small discrete residual") {
    auto s = solve_example("ex_4_4");
    ValueSolution cf = s.sol;
    for (size_t i = 0; i < cf.grid.size(); ++i) cf.v[i] = s.ex.exact_value(cf.grid[i]);
    Tridiag L = build_generator(cf.grid, s.ex.config.diffusion, 0.1);
    auto Lv = L.apply(cf.v);
    double h = cf.grid[1] - cf.grid[0];
    double worst = 0.0;
    for (size_t i = 1; i + 1 < cf.grid.size(); ++i)
        if (cf.grid[i] > 0.01 && cf.grid[i] < 1.99) worst = std::max(worst, std::fabs(Lv[i]));
    CHECK(worst <= 10 * h * h);
}

TEST_CASE("brute-force oracle trivial cases") {
    auto grid = make_grid(-1, 1, 51);
    std::vector<double> f(grid.size()), z(grid.size(), 0.0), one(grid.size(), 1.0);
    for (size_t i = 0; i < grid.size(); ++i) f[i] = grid[i] * grid[i];
    auto pinched = brute_force_oracle(arrays(grid, f, f), wiener(0.1, grid), 51);
    for (size_t i = 0; i < 51; ++i) CHECK(pinched[i] == doctest::Approx(f[i]).epsilon(1e-12));
    auto dominated = brute_force_oracle(arrays(grid, z, one), wiener(0.1, grid), 51);
    for (double v : dominated) CHECK(v == 0.0);
}

TEST_CASE("oracle agrees with the solver") {
    for (const char* id : {"ex_4_4", "ex_5_1"}) {
        auto s = solve_example(id);
        std::vector<double> states;
        auto orc = brute_force_oracle(s.assoc, s.ex.config.diffusion, 200, 0.0, &states);
        double err = 0.0;
        for (size_t j = 0; j < states.size(); ++j) err = std::max(err, std::fabs(orc[j] - s.sol.value_at(states[j])));
        CAPTURE(id);
        CHECK(err <= 2e-2);
    }
}

TEST_CASE("monotonicity in the obstacles") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 0.5);
    auto grid = make_grid(-3, 3, 301);
    auto d = wiener(0.2, grid);
    std::vector<double> f(grid.size()), g(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        f[i] = std::cos(2 * grid[i]);
        g[i] = f[i] + 0.3 + 0.2 * std::sin(3 * grid[i]);
    }
    auto base = solve_value(arrays(grid, f, g), d);
    for (int t = 0; t < 20; ++t) {
        auto g2 = g;
        auto f2 = f;
        for (size_t i = 0; i < grid.size(); ++i) {
            g2[i] += u(rng);
            f2[i] -= u(rng);
        }
        auto up = solve_value(arrays(grid, f, g2), d);
        auto down = solve_value(arrays(grid, f2, g), d);
        for (size_t i = 1; i + 1 < grid.size(); ++i) {
            CHECK(up.v[i] >= base.v[i] - 1e-10);
            CHECK(down.v[i] <= base.v[i] + 1e-10);
        }
    }
}

TEST_CASE("single-obstacle problems bracket the value") {
    auto s = solve_example("ex_4_4");
    const auto inf = std::numeric_limits<double>::infinity();
    auto sup = s.assoc;
    sup.g_tilde.assign(sup.grid.size(), inf);
    auto inf_game = s.assoc;
    inf_game.f_tilde.assign(inf_game.grid.size(), -inf);
    auto vs = solve_value(sup, s.ex.config.diffusion);
    // The infimum problem has upper obstacle g~ and Dirichlet g~ at the ends.
    ObstacleProblem p;
    p.A = build_generator(s.sol.grid, s.ex.config.diffusion, 0.1);
    p.source.assign(s.sol.grid.size(), 0.0);
    p.lower = inf_game.f_tilde;
    p.upper = s.assoc.g_tilde;
    p.left_value = s.assoc.g_tilde.front();
    p.right_value = s.assoc.g_tilde.back();
    auto vi = solve_obstacle(p, 1e-6, 100000);
    for (size_t i = 0; i < s.sol.grid.size(); ++i) {
        CHECK(s.sol.v[i] <= vs.v[i] + 1e-8);
        CHECK(s.sol.v[i] >= vi.v[i] - 1e-8);
    }
}
