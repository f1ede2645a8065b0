#include <doctest.h>

#include <cmath>
#include <random>

#include "dynkin/associated_game.hpp"
#include "dynkin/errors.hpp"
#include "dynkin/examples.hpp"
#include "dynkin/model.hpp"

using namespace dynkin;

namespace {

DiffusionSpec wiener(double r) {
    DiffusionSpec d;
    d.mu = PiecewiseFn::constant(0.0);
    d.sigma = PiecewiseFn::constant(1.0);
    d.r = r;
    d.grid = make_grid(-1, 1, 5);
    return d;
}

}  // namespace

TEST_CASE("every weak order of three values gets exactly one region") {
    // All 13 weak orders of (f, g, h) over levels {0, 1, 2}.
    int seen = 0;
    for (int f = 0; f < 3; ++f)
        for (int g = 0; g < 3; ++g)
            for (int h = 0; h < 3; ++h) {
                CHECK_NOTHROW(classify_point(f, g, h, 0.0));
                ++seen;
            }
    CHECK(seen == 27);
    CHECK(classify_point(0, 0, 0, 0) == Region::B1);
    CHECK(classify_point(1, 1, 2, 0) == Region::B5);
    CHECK(classify_point(1, 1, 0, 0) == Region::B6);
    CHECK(classify_point(0, 1, 1, 0) == Region::B2);
    CHECK(classify_point(1, 0, 0, 0) == Region::B1);
    CHECK(classify_point(1, 0, 1, 0) == Region::B1);
}

TEST_CASE("classify_regions on the corpus") {
    auto e42 = find_example("ex_4_2");
    auto p42 = classify_regions(e42.config.payoffs, e42.config.diffusion.grid);
    for (size_t i = 0; i < p42.grid.size(); ++i) {
        double x = p42.grid[i];
        if (x > -1 && x < 1) CHECK(p42.labels[i] == Region::B4);
    }
    PayoffTriple zero{PiecewiseFn::constant(0), PiecewiseFn::constant(0), PiecewiseFn::constant(0)};
    auto pz = classify_regions(zero, make_grid(-1, 1, 11));
    for (auto l : pz.labels) CHECK(l == Region::B1);

    auto e44 = find_example("ex_4_4");
    const auto& pay = e44.config.payoffs;
    CHECK(pay.h(-0.5) == 2.25);
    CHECK(pay.g(-0.5) == 2.5);
    CHECK(pay.f(-0.5) == 3.25);
    CHECK(classify_regions(pay, {-0.6, -0.5, -0.4}).labels[1] == Region::B3);
}

TEST_CASE("region sets use refined boundaries") {
    auto e44 = find_example("ex_4_4");
    auto part = classify_regions(e44.config.payoffs, e44.config.diffusion.grid);
    IntervalSet b3 = part.region_set({Region::B3});
    REQUIRE(b3.components().size() == 1);
    CHECK(std::fabs(b3.components()[0].lo + 1.0) <= 1e-11);
    CHECK(std::fabs(b3.components()[0].hi) <= 1e-11);
    IntervalSet b2 = part.region_set({Region::B2});
    REQUIRE(b2.components().size() == 1);
    CHECK(std::fabs(b2.components()[0].lo) <= 1e-11);
    CHECK(std::fabs(b2.components()[0].hi - 2.0) <= 1e-11);
    IntervalSet b1 = part.region_set({Region::B1});
    REQUIRE(b1.isolated_points().size() == 1);
    CHECK(std::fabs(b1.isolated_points()[0]) < 1e-7);
}

TEST_CASE("apply_generator examples") {
    auto d = wiener(0.0);
    CHECK(apply_generator(PiecewiseFn::parse("x^2"), d, 3.0) == 1.0);
    auto e43 = find_example("ex_4_3");
    CHECK(apply_generator(e43.config.payoffs.f, e43.config.diffusion, 1.0) == doctest::Approx(-2.0 / 9.0));
    auto e44 = find_example("ex_4_4");
    CHECK(apply_generator(e44.config.payoffs.g, e44.config.diffusion, -0.5) == doctest::Approx(-0.25));
    CHECK_THROWS_AS(apply_generator(PiecewiseFn::parse("abs(x)"), d, 0.0), KinkEvaluation);
}

TEST_CASE("kink_jump examples") {
    CHECK(kink_jump(PiecewiseFn::parse("abs(x)+1"), 0.0) == 2.0);
    auto e43 = find_example("ex_4_3");
    CHECK(kink_jump(e43.config.payoffs.f, 2.0) == 2.0);
    auto smooth = PiecewiseFn::from_json(nlohmann::json::parse(
        R"([{"interval": ["-inf", 0], "expr": "x"}, {"interval": [0, "inf"], "expr": "x"}])"));
    CHECK(kink_jump(smooth, 0.0) == 0.0);
    CHECK_THROWS_AS(kink_jump(smooth, 0.5), NotAKink);
}

TEST_CASE("apply_generator is linear") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3, 3);
    auto d = wiener(0.3);
    d.mu = PiecewiseFn::parse("0.5*x");
    d.sigma = PiecewiseFn::parse("1+0.1*x^2");
    PiecewiseFn w1 = PiecewiseFn::parse("x^3-exp(x)");
    PiecewiseFn w2 = PiecewiseFn::parse("sqrt(x^2+1)*x");
    for (int t = 0; t < 50; ++t) {
        double a = u(rng), b = u(rng), x = u(rng);
        double lhs = apply_generator(PiecewiseFn::combine(a, w1, b, w2), d, x);
        double rhs = a * apply_generator(w1, d, x) + b * apply_generator(w2, d, x);
        CHECK(std::fabs(lhs - rhs) <= 1e-10 * std::max(1.0, std::fabs(rhs)));
    }
}

TEST_CASE("r-harmonic exponential is annihilated") {
    for (double r : {0.05, 0.1, 1.0}) {
        auto d = wiener(r);
        PiecewiseFn w = PiecewiseFn(Expr::unary(Expr::Op::Exp, Expr::constant(std::sqrt(2 * r)) * Expr::variable()));
        for (double x = -3; x <= 3; x += 0.37)
            CHECK(std::fabs(apply_generator(w, d, x)) <= 1e-10 * std::max(1.0, w(x)));
    }
}

TEST_CASE("convex piecewise-linear functions have nonnegative kink jumps") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> slopes(4);
        for (auto& s : slopes) s = u(rng);
        std::sort(slopes.begin(), slopes.end());
        std::vector<Piece> pieces;
        double cuts[] = {-1.0, 0.0, 1.0};
        double value = 0.0;  // value at -1 of the first piece
        double lo = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < 4; ++k) {
            double anchor = (k == 0) ? -1.0 : cuts[k - 1];
            double hi = (k < 3) ? cuts[k] : std::numeric_limits<double>::infinity();
            Expr e = Expr::constant(value) + Expr::constant(slopes[k]) * (Expr::variable() - Expr::constant(anchor));
            pieces.push_back({lo, hi, e});
            if (k < 3) value += slopes[k] * (cuts[k] - anchor);
            lo = hi;
        }
        PiecewiseFn w(pieces);
        for (const auto& k : w.kinks()) CHECK(kink_jump(w, k.x) >= 0.0);
    }
}

TEST_CASE("associated payoffs on the corpus") {
    auto e42 = find_example("ex_4_2");
    auto part = classify_regions(e42.config.payoffs, e42.config.diffusion.grid);
    auto a = build_associated_payoffs(e42.config.payoffs, part);
    for (size_t i = 0; i < a.grid.size(); ++i) {
        double x = a.grid[i];
        if (x > -1 && x < 1) {
            CHECK(a.f_tilde[i] == std::fabs(x) + 1.0);
            CHECK(a.g_tilde[i] == a.f_tilde[i]);
        }
    }
    auto e44 = find_example("ex_4_4");
    auto part44 = classify_regions(e44.config.payoffs, {-0.6, -0.5, -0.4});
    auto a44 = build_associated_payoffs(e44.config.payoffs, part44);
    CHECK(a44.f_tilde[1] == 2.5);
    CHECK(a44.g_tilde[1] == 2.5);
    CHECK(a44.source_tag[1] == SourceTag::G);
}

TEST_CASE("associated payoffs are the identity on ordered triples") {
    PayoffTriple t{PiecewiseFn::parse("x"), PiecewiseFn::parse("x+2+x^2"), PiecewiseFn::parse("x+1")};
    auto grid = make_grid(-2, 2, 41);
    auto a = build_associated_payoffs(t, classify_regions(t, grid));
    for (size_t i = 0; i < grid.size(); ++i) {
        CHECK(a.f_tilde[i] == t.f(grid[i]));
        CHECK(a.g_tilde[i] == t.g(grid[i]));
    }
}

TEST_CASE("associated payoffs are continuous across region boundaries") {
    for (const auto& e : register_examples()) {
        auto part = classify_regions(e.config.payoffs, e.config.diffusion.grid);
        const auto& p = e.config.payoffs;
        for (const auto& b : part.boundaries) {
            double f = p.f(b.x), g = p.g(b.x), h = p.h(b.x);
            bool eq = std::fabs(f - g) <= 1e-8;
            auto l = associated_values(f, g, h, b.left, eq);
            auto r = associated_values(f, g, h, b.right, eq);
            CHECK(std::fabs(l.first - r.first) <= 1e-8);
            CHECK(std::fabs(l.second - r.second) <= 1e-8);
        }
    }
}
