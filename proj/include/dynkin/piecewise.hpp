#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynkin/expr.hpp"

namespace dynkin {

struct Piece {
    double lo;
    double hi;
    Expr expr;
};

struct Kink {
    double x;
    double left_slope;
    double right_slope;
};

// Continuous function given by expression pieces on consecutive intervals.
// Kinks are the interior junctions plus the sign changes of abs() arguments.
class PiecewiseFn {
public:
    PiecewiseFn();
    explicit PiecewiseFn(Expr e);
    explicit PiecewiseFn(std::vector<Piece> pieces);

    static PiecewiseFn constant(double c);
    static PiecewiseFn parse(const std::string& text);
    static PiecewiseFn from_json(const nlohmann::json& j, const std::string& where = "fn");
    // a*w1 + b*w2 on the common refinement of the pieces.
    static PiecewiseFn combine(double a, const PiecewiseFn& w1, double b, const PiecewiseFn& w2);

    double operator()(double x) const;
    // Value and derivatives; throws KinkEvaluation at a kink.
    Jet jet(double x) const;
    // One-sided jet, valid at kinks (side = +1 right, -1 left).
    Jet one_sided(double x, int side) const;
    double derivative(double x) const { return jet(x).d1; }
    double second_derivative(double x) const { return jet(x).d2; }

    const std::vector<Kink>& kinks() const { return kinks_; }
    const Kink* find_kink(double x) const;
    bool is_kink(double x) const { return find_kink(x) != nullptr; }
    const std::vector<Piece>& pieces() const { return pieces_; }
    bool is_constant() const;

    nlohmann::json to_json() const;

private:
    size_t piece_index(double x) const;
    void build_kinks();

    std::vector<Piece> pieces_;
    std::vector<Kink> kinks_;
};

}  // namespace dynkin
