#include <doctest.h>

#include <cmath>

#include "dynkin/errors.hpp"
#include "dynkin/expr.hpp"
#include "dynkin/piecewise.hpp"

using namespace dynkin;

TEST_CASE("parser handles precedence and functions") {
    CHECK(parse_expr("1+2*3").eval(0) == 7.0);
    CHECK(parse_expr("2^3^2").eval(0) == 512.0);
    CHECK(parse_expr("-x^2").eval(3) == -9.0);
    CHECK(parse_expr("abs(x-1)+exp(0)").eval(-1) == 3.0);
    CHECK(parse_expr("sqrt(x)*2").eval(4) == doctest::Approx(4.0));
    CHECK(parse_expr("(x+1)/(x-1)").eval(3) == 2.0);
    CHECK_THROWS_AS(parse_expr("1+"), ValidationError);
    CHECK_THROWS_AS(parse_expr("foo(x)"), ValidationError);
    CHECK_THROWS_AS(parse_expr("(x"), ValidationError);
}

TEST_CASE("jets match hand derivatives") {
    Jet j = parse_expr("x^3 - 2*x").jet(2.0);
    CHECK(j.v == 4.0);
    CHECK(j.d1 == 10.0);
    CHECK(j.d2 == 12.0);
    Jet e = parse_expr("exp(2*x)").jet(0.5);
    CHECK(e.d1 == doctest::Approx(2.0 * std::exp(1.0)));
    CHECK(e.d2 == doctest::Approx(4.0 * std::exp(1.0)));
    Jet q = parse_expr("1/x").jet(2.0);
    CHECK(q.d1 == doctest::Approx(-0.25));
    CHECK(q.d2 == doctest::Approx(0.25));
    Jet s = parse_expr("sqrt(x)").jet(4.0);
    CHECK(s.d1 == doctest::Approx(0.25));
    CHECK(s.d2 == doctest::Approx(-1.0 / 32.0));
    Jet p = parse_expr("x^x").jet(1.0);
    CHECK(p.d1 == doctest::Approx(1.0));
    CHECK(p.d2 == doctest::Approx(2.0));
}

TEST_CASE("one-sided jets at an abs zero") {
    Expr e = parse_expr("abs(x-0.3)");
    auto z = e.abs_zeros(-1, 1);
    REQUIRE(z.size() == 1);
    CHECK(z[0] == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(e.jet(z[0], -1).d1 == -1.0);
    CHECK(e.jet(z[0], +1).d1 == 1.0);
}

TEST_CASE("json descriptors") {
    auto j = nlohmann::json::parse(R"({"op": "add", "args": [{"poly": [1, 0, 2]}, {"op": "abs", "args": ["x"]}]})");
    Expr e = expr_from_json(j);
    CHECK(e.eval(-2) == 11.0);
    CHECK_THROWS_AS(expr_from_json(nlohmann::json::parse(R"({"op": "nope", "args": []})")), ValidationError);
    auto pw = PiecewiseFn::from_json(nlohmann::json::parse(
        R"([{"interval": ["-inf", 2], "expr": "2*x"}, {"interval": [2, "inf"], "expr": "x^2"}])"));
    CHECK(pw(1.0) == 2.0);
    CHECK(pw(3.0) == 9.0);
    REQUIRE(pw.kinks().size() == 1);
    CHECK(pw.kinks()[0].left_slope == 2.0);
    CHECK(pw.kinks()[0].right_slope == 4.0);
    auto back = PiecewiseFn::from_json(pw.to_json());
    CHECK(back(2.5) == pw(2.5));
}

TEST_CASE("discontinuous pieces are rejected") {
    auto j = nlohmann::json::parse(R"([{"interval": [null, 0], "expr": "x"}, {"interval": [0, null], "expr": "x+1"}])");
    CHECK_THROWS_AS(PiecewiseFn::from_json(j), ValidationError);
}

TEST_CASE("derivatives at kinks are refused") {
    PiecewiseFn w = PiecewiseFn::parse("abs(x)+1");
    CHECK_THROWS_AS(w.jet(0.0), KinkEvaluation);
    CHECK(w.derivative(0.5) == 1.0);
}

TEST_CASE("linear combination of piecewise functions") {
    PiecewiseFn a = PiecewiseFn::parse("abs(x)");
    PiecewiseFn b = PiecewiseFn::from_json(nlohmann::json::parse(
        R"([{"interval": ["-inf", 1], "expr": "x"}, {"interval": [1, "inf"], "expr": "x^2"}])"));
    PiecewiseFn c = PiecewiseFn::combine(2.0, a, -3.0, b);
    for (double x : {-2.0, -0.5, 0.5, 1.5, 3.0}) CHECK(c(x) == doctest::Approx(2 * a(x) - 3 * b(x)));
    CHECK(c.kinks().size() == 2);
}
