#include "dynkin/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dynkin/errors.hpp"

namespace dynkin {

struct Expr::Node {
    Op op = Op::Const;
    double value = 0.0;
    std::shared_ptr<const Node> a, b;
};

namespace {

double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

Expr::Expr() : node_(std::make_shared<Node>()) {}
Expr::Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

Expr Expr::constant(double c) {
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = c;
    return Expr(n);
}

Expr Expr::variable() {
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    return Expr(n);
}

Expr Expr::unary(Op op, Expr a) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = a.node_;
    return Expr(n);
}

Expr Expr::binary(Op op, Expr a, Expr b) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = a.node_;
    n->b = b.node_;
    return Expr(n);
}

Expr Expr::polynomial(const std::vector<double>& coeffs) {
    // Horner form keeps evaluation cheap and exact for low degrees.
    if (coeffs.empty()) return constant(0.0);
    Expr acc = constant(coeffs.back());
    for (auto it = coeffs.rbegin() + 1; it != coeffs.rend(); ++it)
        acc = binary(Op::Add, binary(Op::Mul, acc, variable()), constant(*it));
    return acc;
}

static double eval_node(const Expr::Node& n, double x);
static Jet jet_node(const Expr::Node& n, double x, int side);

static double eval_node(const Expr::Node& n, double x) {
    using Op = Expr::Op;
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var: return x;
        case Op::Add: return eval_node(*n.a, x) + eval_node(*n.b, x);
        case Op::Sub: return eval_node(*n.a, x) - eval_node(*n.b, x);
        case Op::Mul: return eval_node(*n.a, x) * eval_node(*n.b, x);
        case Op::Div: return eval_node(*n.a, x) / eval_node(*n.b, x);
        case Op::Neg: return -eval_node(*n.a, x);
        case Op::Pow: {
            double base = eval_node(*n.a, x);
            double e = eval_node(*n.b, x);
            if (e == 2.0) return base * base;
            return std::pow(base, e);
        }
        case Op::Abs: return std::fabs(eval_node(*n.a, x));
        case Op::Exp: return std::exp(eval_node(*n.a, x));
        case Op::Sqrt: return std::sqrt(eval_node(*n.a, x));
        case Op::Log: return std::log(eval_node(*n.a, x));
    }
    return 0.0;
}

static Jet jet_node(const Expr::Node& n, double x, int side) {
    using Op = Expr::Op;
    switch (n.op) {
        case Op::Const: return {n.value, 0.0, 0.0};
        case Op::Var: return {x, 1.0, 0.0};
        case Op::Add: {
            Jet u = jet_node(*n.a, x, side), w = jet_node(*n.b, x, side);
            return {u.v + w.v, u.d1 + w.d1, u.d2 + w.d2};
        }
        case Op::Sub: {
            Jet u = jet_node(*n.a, x, side), w = jet_node(*n.b, x, side);
            return {u.v - w.v, u.d1 - w.d1, u.d2 - w.d2};
        }
        case Op::Mul: {
            Jet u = jet_node(*n.a, x, side), w = jet_node(*n.b, x, side);
            return {u.v * w.v, u.d1 * w.v + u.v * w.d1,
                    u.d2 * w.v + 2.0 * u.d1 * w.d1 + u.v * w.d2};
        }
        case Op::Div: {
            Jet u = jet_node(*n.a, x, side), w = jet_node(*n.b, x, side);
            double q = u.v / w.v;
            double q1 = (u.d1 - q * w.d1) / w.v;
            double q2 = (u.d2 - 2.0 * q1 * w.d1 - q * w.d2) / w.v;
            return {q, q1, q2};
        }
        case Op::Neg: {
            Jet u = jet_node(*n.a, x, side);
            return {-u.v, -u.d1, -u.d2};
        }
        case Op::Pow: {
            Jet u = jet_node(*n.a, x, side);
            Jet e = jet_node(*n.b, x, side);
            if (e.d1 == 0.0 && e.d2 == 0.0) {
                double c = e.v;
                if (c == 0.0) return {1.0, 0.0, 0.0};
                if (c == 1.0) return u;
                if (c == 2.0)
                    return {u.v * u.v, 2.0 * u.v * u.d1, 2.0 * (u.d1 * u.d1 + u.v * u.d2)};
                double p = std::pow(u.v, c);
                double p1 = c * std::pow(u.v, c - 1.0);
                double p2 = c * (c - 1.0) * std::pow(u.v, c - 2.0);
                return {p, p1 * u.d1, p2 * u.d1 * u.d1 + p1 * u.d2};
            }
            // u^e = exp(e log u)
            double lu = std::log(u.v);
            Jet l{lu, u.d1 / u.v, (u.d2 * u.v - u.d1 * u.d1) / (u.v * u.v)};
            Jet m{e.v * l.v, e.d1 * l.v + e.v * l.d1, e.d2 * l.v + 2.0 * e.d1 * l.d1 + e.v * l.d2};
            double ev = std::exp(m.v);
            return {ev, ev * m.d1, ev * (m.d2 + m.d1 * m.d1)};
        }
        case Op::Abs: {
            Jet u = jet_node(*n.a, x, side);
            double s = sgn(u.v);
            double band = 1e-12 * (1.0 + std::fabs(x)) * std::max(1.0, std::fabs(u.d1));
            if (side != 0 && std::fabs(u.v) <= band) {
                if (u.d1 != 0.0)
                    s = sgn(side * u.d1);
                else
                    s = u.d2 >= 0.0 ? 1.0 : -1.0;
            }
            if (s == 0.0) s = 1.0;
            return {std::fabs(u.v), s * u.d1, s * u.d2};
        }
        case Op::Exp: {
            Jet u = jet_node(*n.a, x, side);
            double ev = std::exp(u.v);
            return {ev, ev * u.d1, ev * (u.d2 + u.d1 * u.d1)};
        }
        case Op::Sqrt: {
            Jet u = jet_node(*n.a, x, side);
            double s = std::sqrt(u.v);
            double s1 = 0.5 / s;
            double s2 = -0.25 / (s * u.v);
            return {s, s1 * u.d1, s2 * u.d1 * u.d1 + s1 * u.d2};
        }
        case Op::Log: {
            Jet u = jet_node(*n.a, x, side);
            return {std::log(u.v), u.d1 / u.v, (u.d2 * u.v - u.d1 * u.d1) / (u.v * u.v)};
        }
    }
    return {};
}

double Expr::eval(double x) const { return eval_node(*node_, x); }

Jet Expr::jet(double x, int side) const { return jet_node(*node_, x, side); }

static void collect_abs_args(const std::shared_ptr<const Expr::Node>& n,
                             std::vector<std::shared_ptr<const Expr::Node>>& out) {
    if (!n) return;
    if (n->op == Expr::Op::Abs) out.push_back(n->a);
    collect_abs_args(n->a, out);
    collect_abs_args(n->b, out);
}

std::vector<double> Expr::abs_zeros(double a, double b) const {
    std::vector<std::shared_ptr<const Node>> args;
    collect_abs_args(node_, args);
    std::vector<double> zeros;
    if (args.empty() || !(b > a)) return zeros;
    constexpr int samples = 512;
    for (const auto& arg : args) {
        double prev_x = a;
        double prev_v = eval_node(*arg, a);
        for (int k = 1; k <= samples; ++k) {
            double xk = (k == samples) ? b : a + (b - a) * k / samples;
            double vk = eval_node(*arg, xk);
            if (vk == 0.0 && k < samples && prev_v != 0.0) {
                zeros.push_back(xk);
            } else if (prev_v * vk < 0.0) {
                double lo = prev_x, hi = xk, flo = prev_v;
                for (int it = 0; it < 200; ++it) {
                    double mid = 0.5 * (lo + hi);
                    if (mid <= lo || mid >= hi) break;
                    double fm = eval_node(*arg, mid);
                    if (fm == 0.0) { lo = hi = mid; break; }
                    if ((fm < 0) == (flo < 0)) { lo = mid; flo = fm; } else { hi = mid; }
                }
                // Prefer the endpoint where the argument is closest to zero.
                double z = (std::fabs(eval_node(*arg, lo)) <= std::fabs(eval_node(*arg, hi))) ? lo : hi;
                if (z > a && z < b) zeros.push_back(z);
            }
            prev_x = xk;
            prev_v = vk;
        }
    }
    std::sort(zeros.begin(), zeros.end());
    zeros.erase(std::unique(zeros.begin(), zeros.end(),
                            [](double p, double q) { return std::fabs(p - q) <= 1e-12 * (1.0 + std::fabs(p)); }),
                zeros.end());
    return zeros;
}

bool Expr::is_constant() const {
    std::vector<const Node*> stack{node_.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (n->op == Op::Var) return false;
        if (n->a) stack.push_back(n->a.get());
        if (n->b) stack.push_back(n->b.get());
    }
    return true;
}

static void print_node(const Expr::Node& n, std::ostream& os) {
    using Op = Expr::Op;
    auto bin = [&](const char* sym) {
        os << '(';
        print_node(*n.a, os);
        os << sym;
        print_node(*n.b, os);
        os << ')';
    };
    auto fn = [&](const char* name) {
        os << name << '(';
        print_node(*n.a, os);
        os << ')';
    };
    switch (n.op) {
        case Op::Const: {
            std::ostringstream s;
            s.precision(17);
            s << n.value;
            if (n.value < 0) os << '(' << s.str() << ')'; else os << s.str();
            break;
        }
        case Op::Var: os << 'x'; break;
        case Op::Add: bin("+"); break;
        case Op::Sub: bin("-"); break;
        case Op::Mul: bin("*"); break;
        case Op::Div: bin("/"); break;
        case Op::Pow: bin("^"); break;
        case Op::Neg: os << "(-"; print_node(*n.a, os); os << ')'; break;
        case Op::Abs: fn("abs"); break;
        case Op::Exp: fn("exp"); break;
        case Op::Sqrt: fn("sqrt"); break;
        case Op::Log: fn("log"); break;
    }
}

std::string Expr::str() const {
    std::ostringstream os;
    print_node(*node_, os);
    return os.str();
}

namespace {

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    Expr parse() {
        Expr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character");
        return e;
    }

private:
    std::string_view s_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ValidationError("expression '" + std::string(s_) + "': " + msg + " at column " +
                              std::to_string(pos_ + 1));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr expr() {
        Expr acc = term();
        for (;;) {
            if (accept('+')) acc = Expr::binary(Expr::Op::Add, acc, term());
            else if (accept('-')) acc = Expr::binary(Expr::Op::Sub, acc, term());
            else return acc;
        }
    }

    Expr term() {
        Expr acc = unary();
        for (;;) {
            if (accept('*')) acc = Expr::binary(Expr::Op::Mul, acc, unary());
            else if (accept('/')) acc = Expr::binary(Expr::Op::Div, acc, unary());
            else return acc;
        }
    }

    Expr unary() {
        if (accept('-')) return Expr::unary(Expr::Op::Neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    Expr power() {
        Expr base = primary();
        if (accept('^')) return Expr::binary(Expr::Op::Pow, base, unary());
        return base;
    }

    Expr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::string rest(s_.substr(pos_));
            char* end = nullptr;
            double v = std::strtod(rest.c_str(), &end);
            if (end == rest.c_str()) fail("bad number");
            pos_ += static_cast<size_t>(end - rest.c_str());
            return Expr::constant(v);
        }
        if (accept('(')) {
            Expr e = expr();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            std::string name(s_.substr(start, pos_ - start));
            if (name == "x") return Expr::variable();
            if (name == "pi") return Expr::constant(std::numbers::pi);
            Expr::Op op;
            if (name == "abs") op = Expr::Op::Abs;
            else if (name == "exp") op = Expr::Op::Exp;
            else if (name == "sqrt") op = Expr::Op::Sqrt;
            else if (name == "log") op = Expr::Op::Log;
            else {
                pos_ = start;
                fail("unknown identifier '" + name + "'");
            }
            if (!accept('(')) fail("expected '(' after " + name);
            Expr arg = expr();
            if (!accept(')')) fail("expected ')'");
            return Expr::unary(op, arg);
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

}  // namespace

Expr parse_expr(std::string_view text) { return Parser(text).parse(); }

Expr expr_from_json(const nlohmann::json& j, const std::string& where) {
    if (j.is_number()) return Expr::constant(j.get<double>());
    if (j.is_string()) {
        try {
            return parse_expr(j.get<std::string>());
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    if (j.is_object()) {
        if (j.contains("poly")) {
            if (!j["poly"].is_array()) throw ValidationError(where + ".poly: expected array of numbers");
            std::vector<double> c;
            for (const auto& v : j["poly"]) {
                if (!v.is_number()) throw ValidationError(where + ".poly: expected array of numbers");
                c.push_back(v.get<double>());
            }
            return Expr::polynomial(c);
        }
        if (!j.contains("op") || !j["op"].is_string())
            throw ValidationError(where + ": expected \"op\" or \"poly\" key");
        std::string op = j["op"].get<std::string>();
        std::vector<Expr> args;
        if (j.contains("args")) {
            if (!j["args"].is_array()) throw ValidationError(where + ".args: expected array");
            for (size_t i = 0; i < j["args"].size(); ++i)
                args.push_back(expr_from_json(j["args"][i], where + ".args[" + std::to_string(i) + "]"));
        }
        auto need = [&](size_t n) {
            if (args.size() != n)
                throw ValidationError(where + ": operator '" + op + "' takes " + std::to_string(n) + " argument(s)");
        };
        if (op == "x") { need(0); return Expr::variable(); }
        if (op == "const") {
            if (!j.contains("value") || !j["value"].is_number())
                throw ValidationError(where + ": const needs numeric \"value\"");
            return Expr::constant(j["value"].get<double>());
        }
        if (op == "add" || op == "sub" || op == "mul" || op == "div" || op == "pow") {
            if (op == "add" || op == "mul") {
                if (args.empty()) throw ValidationError(where + ": '" + op + "' needs arguments");
                Expr acc = args[0];
                for (size_t i = 1; i < args.size(); ++i)
                    acc = Expr::binary(op == "add" ? Expr::Op::Add : Expr::Op::Mul, acc, args[i]);
                return acc;
            }
            need(2);
            Expr::Op o = op == "sub" ? Expr::Op::Sub : (op == "div" ? Expr::Op::Div : Expr::Op::Pow);
            return Expr::binary(o, args[0], args[1]);
        }
        need(1);
        if (op == "neg") return Expr::unary(Expr::Op::Neg, args[0]);
        if (op == "abs") return Expr::unary(Expr::Op::Abs, args[0]);
        if (op == "exp") return Expr::unary(Expr::Op::Exp, args[0]);
        if (op == "sqrt") return Expr::unary(Expr::Op::Sqrt, args[0]);
        if (op == "log") return Expr::unary(Expr::Op::Log, args[0]);
        throw ValidationError(where + ": unknown operator '" + op + "'");
    }
    throw ValidationError(where + ": expected number, string or object");
}

}  // namespace dynkin
