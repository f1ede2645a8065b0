#include "dynkin/examples.hpp"

#include <cmath>

#include "dynkin/errors.hpp"

namespace dynkin {

namespace {

using nlohmann::json;

Example make(std::string id, std::string title, const char* text) {
    Example e;
    e.id = std::move(id);
    e.title = std::move(title);
    e.config_json = json::parse(text);
    e.config = parse_problem(e.config_json);
    build_grid(e.config);
    return e;
}

}  // namespace

double quadratic_threshold(double r) {
    double k = std::sqrt(2.0 * r);
    // tanh(k b) - 2/(k b) increases from -inf to 1 on b > 0.
    double lo = 1e-6, hi = 100.0 / k;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (std::tanh(k * mid) - 2.0 / (k * mid) < 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<Example> register_examples() {
    std::vector<Example> out;

    {
        Example e = make("ex_4_2", "kinked f with a minimizer push at 0", R"cfg({
          "diffusion": {"mu": 0, "sigma": 1, "r": 0.1},
          "payoffs": {
            "f": "abs(x)+1",
            "g": [{"interval": ["-inf", -1], "expr": "abs(x)+1"},
                  {"interval": [-1, 1], "expr": "x^2+abs(x)"},
                  {"interval": [1, "inf"], "expr": "abs(x)+1"}],
            "h": [{"interval": ["-inf", -1], "expr": "abs(x)+1"},
                  {"interval": [-1, 1], "expr": "2+abs(x)-x^2"},
                  {"interval": [1, "inf"], "expr": "abs(x)+1"}]
          },
          "grid": {"n": 6001, "alpha_num": -3, "beta_num": 3},
          "simulation": {"x0": 0.5, "dt": 1e-4, "n_paths": 200000, "seed": 42}
        })cfg");
        e.exact_value = [](double x) { return std::fabs(x) + 1.0; };
        e.value_tol = 1e-6;
        e.exact_randomization = ExactRandomization{2, [](double) { return 0.0; }, {-0.5, 0.5}, {{0.0, 1.0}}};
        e.verdict = ExpectedVerdict::Nonexistence;
        e.mc_x0 = 0.5;
        e.deviation_x0 = {0.5, 0.0};
        e.explicit_equilibrium = true;
        out.push_back(std::move(e));
    }
    {
        Example e = make("ex_4_3", "linear-quadratic f with a push at 2", R"cfg({
          "diffusion": {"mu": 0, "sigma": 1, "r": 0.1111111111111111},
          "payoffs": {
            "f": [{"interval": ["-inf", 2], "expr": "2*x"},
                  {"interval": [2, "inf"], "expr": "x^2"}],
            "g": "2*x-4",
            "h": "x^2+2"
          },
          "grid": {"n": 14001, "alpha_num": -6, "beta_num": 8},
          "simulation": {"x0": 0, "dt": 1e-4, "n_paths": 200000, "seed": 43}
        })cfg");
        e.config.diffusion.r = 1.0 / 9.0;
        e.exact_value = [](double x) { return x < 2.0 ? 2.0 * x : x * x; };
        // Minimizer rate where V = f: (L - r) f / (f - g), with g = 2x - 4.
        e.exact_randomization = ExactRandomization{
            2,
            [](double x) {
                const double r = 1.0 / 9.0;
                const double g = 2.0 * x - 4.0;
                if (x <= 0.0) return -2.0 * r * x / (2.0 * x - g);
                if (x <= 2.0) return 0.0;
                if (x < 3.0) return (1.0 - r * x * x) / (x * x - g);
                return 0.0;
            },
            {-5.5, -3.0, -1.25, -0.4, 0.5, 1.5, 2.2, 2.5, 2.9, 4.0},
            {{2.0, 0.25}}};
        e.mc_x0 = 0.0;
        e.deviation_x0 = {0.0, -1.0};
        e.explicit_equilibrium = true;
        out.push_back(std::move(e));
    }
    {
        Example e = make("ex_4_4", "continuation on (0,2) with maximizer randomization on (-1,0)", R"cfg({
          "diffusion": {"mu": 0, "sigma": 1, "r": 0.1},
          "payoffs": {
            "f": "(x-1)^2+1",
            "g": [{"interval": ["-inf", 0], "expr": "abs(x)+2"},
                  {"interval": [0, "inf"], "expr": "2"}],
            "h": [{"interval": ["-inf", 0], "expr": "x^2+2"},
                  {"interval": [0, "inf"], "expr": "2"}]
          },
          "grid": {"n": 8001, "alpha_num": -3, "beta_num": 5},
          "simulation": {"x0": 1, "dt": 1e-4, "n_paths": 200000, "seed": 44}
        })cfg");
        e.exact_value = [](double x) {
            const double k = std::sqrt(0.2);
            const double C = 2.0 * (1.0 - std::exp(-2.0 * k)) / (std::exp(2.0 * k) - std::exp(-2.0 * k));
            if (x > 0.0 && x < 2.0) return C * std::exp(k * x) + (2.0 - C) * std::exp(-k * x);
            if (x <= -1.0) return x * x + 2.0;
            if (x < 0.0) return std::fabs(x) + 2.0;
            return 2.0;
        };
        e.mc_x0 = 1.0;
        e.deviation_x0 = {1.0, -0.5};
        e.oracle_check = true;
        e.explicit_equilibrium = true;
        out.push_back(std::move(e));
    }
    {
        Example e = make("ex_5_1", "quadratic payoffs without a pure equilibrium", R"cfg({
          "diffusion": {"mu": 0, "sigma": 1, "r": 0.1},
          "payoffs": {"f": "x^2", "g": "x^2+10", "h": "x^2-1"},
          "grid": {"n": 12001, "alpha_num": -6, "beta_num": 6},
          "simulation": {"x0": 0, "dt": 2e-3, "n_paths": 20000, "seed": 51},
          "epsilon": 0.05
        })cfg");
        const double b = quadratic_threshold(0.1);
        e.exact_value = [b](double x) {
            const double k = std::sqrt(0.2);
            if (std::fabs(x) >= b) return x * x;
            return b * b * std::cosh(k * x) / std::cosh(k * b);
        };
        e.deviation_x0 = {0.0, 5.0};
        e.deviation_scale = b;
        e.deviation_dt = 2e-3;
        e.deviation_epsilon = 0.05;
        e.exact_threshold = b;
        e.oracle_check = true;
        e.verdict = ExpectedVerdict::Nonexistence;
        out.push_back(std::move(e));
    }
    {
        Example e = make("ex_5_2", "kinked simultaneous payoff with a pure equilibrium", R"cfg({
          "diffusion": {"mu": 0, "sigma": 1, "r": 0.1},
          "payoffs": {
            "f": "x^2",
            "g": "x^2+10",
            "h": [{"interval": ["-inf", -2], "expr": "x^2+7"},
                  {"interval": [-2, 2], "expr": "8*abs(x)-5"},
                  {"interval": [2, "inf"], "expr": "x^2+7"}]
          },
          "grid": {"n": 20001, "alpha_num": -10, "beta_num": 10},
          "epsilon": 0.05
        })cfg");
        const double b = quadratic_threshold(0.1);
        e.exact_value = [b](double x) {
            const double k = std::sqrt(0.2);
            if (std::fabs(x) >= b) return x * x;
            return b * b * std::cosh(k * x) / std::cosh(k * b);
        };
        e.exact_threshold = b;
        e.verdict = ExpectedVerdict::Sufficient;
        out.push_back(std::move(e));
    }
    {
        Example e = make("ex_5_4", "no pure equilibrium although both tests are silent", R"cfg({
          "diffusion": {"mu": 0, "sigma": 1, "r": 0.1},
          "payoffs": {
            "f": [{"interval": ["-inf", -1], "expr": "x^2+3"},
                  {"interval": [-1, 1], "expr": "4*abs(x)"},
                  {"interval": [1, "inf"], "expr": "x^2+3"}],
            "g": "x^2+3",
            "h": [{"interval": ["-inf", -1], "expr": "x^2+3"},
                  {"interval": [-1, 0.5], "expr": "3-x"},
                  {"interval": [0.5, 1], "expr": "1+3*x"},
                  {"interval": [1, "inf"], "expr": "x^2+3"}]
          },
          "grid": {"n": 6001, "alpha_num": -3, "beta_num": 3},
          "epsilon": 0.05
        })cfg");
        e.exact_value = [](double x) { return x * x + 3.0; };
        e.verdict = ExpectedVerdict::Inconclusive;
        out.push_back(std::move(e));
    }
    return out;
}

std::string verdict_name(ExpectedVerdict v) {
    switch (v) {
        case ExpectedVerdict::Sufficient: return "sufficient";
        case ExpectedVerdict::Nonexistence: return "nonexistence";
        case ExpectedVerdict::Inconclusive: return "inconclusive";
        case ExpectedVerdict::Unspecified: break;
    }
    return "unspecified";
}

Example find_example(const std::string& id) {
    for (auto& e : register_examples())
        if (e.id == id) return e;
    throw ValidationError("unknown example id '" + id + "'");
}

}  // namespace dynkin
