#include "dynkin/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynkin/errors.hpp"

namespace dynkin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool near(double a, double b) { return std::fabs(a - b) <= 1e-12 * (1.0 + std::fabs(a)); }

double bound_from_json(const nlohmann::json& j, const std::string& where) {
    if (j.is_null()) return kInf;  // sign fixed by caller
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "-inf" || s == "-infinity") return -kInf;
        if (s == "inf" || s == "+inf" || s == "infinity") return kInf;
    }
    throw ValidationError(where + ": interval bound must be a number, null or \"-inf\"/\"inf\"");
}

}  // namespace

PiecewiseFn::PiecewiseFn() : PiecewiseFn(Expr::constant(0.0)) {}

PiecewiseFn::PiecewiseFn(Expr e) {
    pieces_.push_back({-kInf, kInf, std::move(e)});
    build_kinks();
}

PiecewiseFn::PiecewiseFn(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw ValidationError("piecewise function needs at least one piece");
    for (size_t i = 0; i < pieces_.size(); ++i) {
        if (!(pieces_[i].lo < pieces_[i].hi))
            throw ValidationError("piece " + std::to_string(i) + " has empty interval");
        if (i > 0 && pieces_[i].lo != pieces_[i - 1].hi)
            throw ValidationError("pieces " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                  " are not contiguous");
    }
    for (size_t i = 1; i < pieces_.size(); ++i) {
        double x = pieces_[i].lo;
        double l = pieces_[i - 1].expr.eval(x);
        double r = pieces_[i].expr.eval(x);
        double scale = std::max({1.0, std::fabs(l), std::fabs(r)});
        if (!(std::fabs(l - r) <= 1e-12 * scale))
            throw ValidationError("piecewise function is discontinuous at x=" + std::to_string(x) +
                                  " (left " + std::to_string(l) + ", right " + std::to_string(r) + ")");
    }
    build_kinks();
}

PiecewiseFn PiecewiseFn::constant(double c) { return PiecewiseFn(Expr::constant(c)); }

PiecewiseFn PiecewiseFn::parse(const std::string& text) { return PiecewiseFn(parse_expr(text)); }

PiecewiseFn PiecewiseFn::from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array()) return PiecewiseFn(expr_from_json(j, where));
    std::vector<Piece> pieces;
    for (size_t i = 0; i < j.size(); ++i) {
        std::string at = where + "[" + std::to_string(i) + "]";
        const auto& p = j[i];
        if (!p.is_object() || !p.contains("interval") || !p.contains("expr"))
            throw ValidationError(at + ": expected {\"interval\": [a, b], \"expr\": ...}");
        const auto& iv = p["interval"];
        if (!iv.is_array() || iv.size() != 2) throw ValidationError(at + ".interval: expected [a, b]");
        double a = bound_from_json(iv[0], at + ".interval[0]");
        double b = bound_from_json(iv[1], at + ".interval[1]");
        if (iv[0].is_null()) a = -kInf;
        pieces.push_back({a, b, expr_from_json(p["expr"], at + ".expr")});
    }
    try {
        return PiecewiseFn(std::move(pieces));
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    }
}

PiecewiseFn PiecewiseFn::combine(double a, const PiecewiseFn& w1, double b, const PiecewiseFn& w2) {
    std::vector<double> cuts;
    for (const auto& p : w1.pieces_) cuts.push_back(p.lo);
    for (const auto& p : w2.pieces_) cuts.push_back(p.lo);
    cuts.push_back(std::max(w1.pieces_.back().hi, w2.pieces_.back().hi));
    cuts[0] = std::min(w1.pieces_.front().lo, w2.pieces_.front().lo);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<Piece> out;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double lo = cuts[i], hi = cuts[i + 1];
        double probe = std::isfinite(lo) ? (std::isfinite(hi) ? 0.5 * (lo + hi) : lo + 1.0)
                                         : (std::isfinite(hi) ? hi - 1.0 : 0.0);
        const Expr& e1 = w1.pieces_[w1.piece_index(probe)].expr;
        const Expr& e2 = w2.pieces_[w2.piece_index(probe)].expr;
        out.push_back({lo, hi, Expr::constant(a) * e1 + Expr::constant(b) * e2});
    }
    return PiecewiseFn(std::move(out));
}

size_t PiecewiseFn::piece_index(double x) const {
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x,
                               [](double v, const Piece& p) { return v < p.hi; });
    if (it == pieces_.end()) return pieces_.size() - 1;
    size_t i = static_cast<size_t>(it - pieces_.begin());
    return i;
}

double PiecewiseFn::operator()(double x) const { return pieces_[piece_index(x)].expr.eval(x); }

const Kink* PiecewiseFn::find_kink(double x) const {
    auto it = std::lower_bound(kinks_.begin(), kinks_.end(), x,
                               [](const Kink& k, double v) { return k.x < v; });
    if (it != kinks_.end() && near(it->x, x)) return &*it;
    if (it != kinks_.begin() && near(std::prev(it)->x, x)) return &*std::prev(it);
    return nullptr;
}

Jet PiecewiseFn::jet(double x) const {
    if (find_kink(x))
        throw KinkEvaluation("derivative requested at kink x=" + std::to_string(x));
    return pieces_[piece_index(x)].expr.jet(x);
}

Jet PiecewiseFn::one_sided(double x, int side) const {
    size_t i = piece_index(x);
    // At a junction the left-sided jet comes from the left piece.
    if (side < 0 && i > 0 && near(pieces_[i].lo, x)) --i;
    return pieces_[i].expr.jet(x, side);
}

bool PiecewiseFn::is_constant() const {
    return pieces_.size() == 1 && pieces_[0].expr.is_constant();
}

void PiecewiseFn::build_kinks() {
    std::vector<double> xs;
    for (size_t i = 1; i < pieces_.size(); ++i) xs.push_back(pieces_[i].lo);
    for (const auto& p : pieces_) {
        // Coarse window for unbounded pieces plus a fine one near the origin.
        for (double w : {1e3, 25.0}) {
            double lo = std::max(p.lo, -w), hi = std::min(p.hi, w);
            if (!(hi > lo)) continue;
            for (double z : p.expr.abs_zeros(lo, hi))
                if (z > p.lo && z < p.hi) xs.push_back(z);
        }
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end(), [](double a, double b) { return near(a, b); }), xs.end());
    kinks_.clear();
    for (double x : xs) {
        kinks_.push_back({x, one_sided(x, -1).d1, one_sided(x, +1).d1});
    }
}

nlohmann::json PiecewiseFn::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    auto bound = [](double v) -> nlohmann::json {
        if (v == -kInf) return "-inf";
        if (v == kInf) return "inf";
        return v;
    };
    for (const auto& p : pieces_)
        arr.push_back({{"interval", {bound(p.lo), bound(p.hi)}}, {"expr", p.expr.str()}});
    return arr;
}

}  // namespace dynkin
