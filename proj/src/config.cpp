#include "dynkin/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dynkin/errors.hpp"

namespace dynkin {

namespace {

using nlohmann::json;
constexpr double kInf = std::numeric_limits<double>::infinity();

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ValidationError(where + ": missing field \"" + key + "\"");
    return j.at(key);
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ValidationError(where + ": expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) throw ValidationError(where + ": must be finite");
    return v;
}

double extended(const json& j, const std::string& where, double if_null) {
    if (j.is_null()) return if_null;
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "-inf") return -kInf;
        if (s == "inf" || s == "+inf") return kInf;
    }
    if (j.is_number()) return j.get<double>();
    throw ValidationError(where + ": expected a number, null, \"-inf\" or \"inf\"");
}

std::string line_col(const std::string& text, size_t byte) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

ProblemConfig parse_problem(const json& j) {
    if (!j.is_object()) throw ValidationError("config: top level must be an object");
    ProblemConfig c;
    const json& d = require(j, "diffusion", "config");
    c.diffusion.mu = d.contains("mu") ? PiecewiseFn::from_json(d["mu"], "diffusion.mu") : PiecewiseFn::constant(0.0);
    c.diffusion.sigma =
        d.contains("sigma") ? PiecewiseFn::from_json(d["sigma"], "diffusion.sigma") : PiecewiseFn::constant(1.0);
    c.diffusion.r = number(require(d, "r", "diffusion"), "diffusion.r");
    if (c.diffusion.r < 0.0) throw ValidationError("diffusion.r: must be >= 0");
    c.diffusion.alpha = d.contains("alpha") ? extended(d["alpha"], "diffusion.alpha", -kInf) : -kInf;
    c.diffusion.beta = d.contains("beta") ? extended(d["beta"], "diffusion.beta", kInf) : kInf;
    if (!(c.diffusion.alpha < c.diffusion.beta)) throw ValidationError("diffusion: alpha must be < beta");

    const json& p = require(j, "payoffs", "config");
    c.payoffs.f = PiecewiseFn::from_json(require(p, "f", "payoffs"), "payoffs.f");
    c.payoffs.g = PiecewiseFn::from_json(require(p, "g", "payoffs"), "payoffs.g");
    c.payoffs.h = PiecewiseFn::from_json(require(p, "h", "payoffs"), "payoffs.h");

    if (j.contains("grid")) {
        const json& g = j["grid"];
        if (g.contains("n")) {
            if (!g["n"].is_number_integer() || g["n"].get<long long>() < 3)
                throw ValidationError("grid.n: expected an integer >= 3");
            c.grid.n = g["n"].get<size_t>();
        }
        if (g.contains("alpha_num") && !g["alpha_num"].is_null())
            c.grid.alpha_num = number(g["alpha_num"], "grid.alpha_num");
        if (g.contains("beta_num") && !g["beta_num"].is_null())
            c.grid.beta_num = number(g["beta_num"], "grid.beta_num");
    }
    if (j.contains("solver")) {
        const json& s = j["solver"];
        if (s.contains("tol")) c.solver.tol = number(s["tol"], "solver.tol");
        if (s.contains("max_iter")) c.solver.max_iter = static_cast<int>(number(s["max_iter"], "solver.max_iter"));
        if (s.contains("eq_tol")) c.solver.eq_tol = number(s["eq_tol"], "solver.eq_tol");
        if (s.contains("mask_tol")) c.solver.mask_tol = number(s["mask_tol"], "solver.mask_tol");
        if (!(c.solver.tol > 0.0)) throw ValidationError("solver.tol: must be > 0");
    }
    if (j.contains("simulation")) {
        const json& s = j["simulation"];
        if (s.contains("x0")) c.sim.x0 = number(s["x0"], "simulation.x0");
        if (s.contains("dt")) c.sim.dt = number(s["dt"], "simulation.dt");
        if (s.contains("t_max")) c.sim.t_max = number(s["t_max"], "simulation.t_max");
        if (s.contains("band_halfwidth")) c.sim.band_halfwidth = number(s["band_halfwidth"], "simulation.band_halfwidth");
        if (s.contains("n_paths")) c.sim.n_paths = static_cast<size_t>(number(s["n_paths"], "simulation.n_paths"));
        if (s.contains("seed")) {
            if (!s["seed"].is_number_integer()) throw ValidationError("simulation.seed: expected an integer");
            c.sim.seed = s["seed"].get<std::uint64_t>();
        }
        if (!(c.sim.dt > 0.0)) throw ValidationError("simulation.dt: must be > 0");
        if (c.sim.n_paths < 1) throw ValidationError("simulation.n_paths: must be >= 1");
    }
    if (j.contains("epsilon")) {
        c.epsilon = number(j["epsilon"], "epsilon");
        if (!(c.epsilon > 0.0)) throw ValidationError("epsilon: must be > 0");
    }
    return c;
}

ProblemConfig parse_problem_text(const std::string& text, const std::string& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(source + ": JSON syntax error at " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) +
                              ": " + e.what());
    }
    try {
        return parse_problem(j);
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    } catch (const json::exception& e) {
        throw ValidationError(source + ": " + e.what());
    }
}

ProblemConfig load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_problem_text(ss.str(), path);
}

std::pair<double, double> auto_truncation(const DiffusionSpec& diffusion, const PayoffTriple& payoffs) {
    double lo = diffusion.alpha, hi = diffusion.beta;
    std::vector<double> kinks = payoffs.kink_points();
    double klo = kinks.empty() ? 0.0 : kinks.front();
    double khi = kinks.empty() ? 0.0 : kinks.back();
    if (std::isfinite(lo)) klo = std::max(klo, lo);
    if (std::isfinite(hi)) khi = std::min(khi, hi);
    auto pay = [&](double x) {
        return std::max({std::fabs(payoffs.f(x)), std::fabs(payoffs.g(x)), std::fabs(payoffs.h(x))});
    };
    double scale = 1.0;
    for (int k = 0; k <= 20; ++k) scale = std::max(scale, pay(klo + (khi - klo) * k / 20.0));
    double r = diffusion.r;
    auto cut = [&](double edge, double dir) {
        if (r <= 0.0) return edge + dir * 10.0;
        for (double D = 1.0; D < 1e4; D *= 2.0) {
            double x = edge + dir * D;
            double s = std::max(diffusion.sigma(x), diffusion.sigma(edge));
            if (pay(x) * std::exp(-std::sqrt(2.0 * r) * D / s) < 1e-6 * scale) return x;
        }
        return edge + dir * 1e4;
    };
    if (!std::isfinite(lo)) lo = cut(klo, -1.0);
    if (!std::isfinite(hi)) hi = cut(khi, +1.0);
    return {lo, hi};
}

void build_grid(ProblemConfig& config) {
    auto [lo, hi] = auto_truncation(config.diffusion, config.payoffs);
    if (config.grid.alpha_num) lo = *config.grid.alpha_num;
    if (config.grid.beta_num) hi = *config.grid.beta_num;
    if (!(lo >= config.diffusion.alpha && hi <= config.diffusion.beta))
        throw ValidationError("grid: [alpha_num, beta_num] must lie inside [alpha, beta]");
    config.diffusion.grid = make_grid(lo, hi, config.grid.n, config.payoffs.kink_points());
    config.diffusion.validate();
    config.payoffs.validate_on(config.diffusion.grid);
}

}  // namespace dynkin
