#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dynkin {

// Value with exact first and second derivative, propagated in forward mode.
struct Jet {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

// Immutable expression tree in one variable x.
class Expr {
public:
    enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Abs, Exp, Sqrt, Log };

    Expr();
    static Expr constant(double c);
    static Expr variable();
    static Expr unary(Op op, Expr a);
    static Expr binary(Op op, Expr a, Expr b);
    static Expr polynomial(const std::vector<double>& coeffs);

    double eval(double x) const;

    // side = +1 / -1 picks the right / left branch of abs() when its argument
    // vanishes at x; side = 0 uses the sign of the argument as computed.
    Jet jet(double x, int side = 0) const;

    // Points of (a, b) where the argument of some abs() changes sign.
    std::vector<double> abs_zeros(double a, double b) const;

    bool is_constant() const;
    std::string str() const;

    friend Expr operator+(const Expr& a, const Expr& b) { return binary(Op::Add, a, b); }
    friend Expr operator-(const Expr& a, const Expr& b) { return binary(Op::Sub, a, b); }
    friend Expr operator*(const Expr& a, const Expr& b) { return binary(Op::Mul, a, b); }
    friend Expr operator*(double c, const Expr& b) { return binary(Op::Mul, constant(c), b); }

    struct Node;  // defined in the implementation file

private:
    explicit Expr(std::shared_ptr<const Node> n);
    std::shared_ptr<const Node> node_;
};

// Grammar: numbers, x, pi, + - * / ^, unary minus, parentheses and the
// functions abs, exp, sqrt, log. Throws ValidationError with a column number.
Expr parse_expr(std::string_view text);

// Accepts a number, an expression string, {"poly": [c0, c1, ...]} or an
// operator tree {"op": "add", "args": [...]}.
Expr expr_from_json(const nlohmann::json& j, const std::string& where = "expr");

}  // namespace dynkin
