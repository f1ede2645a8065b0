#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynkin/config.hpp"
#include "dynkin/strategy.hpp"

namespace dynkin {

enum class ExpectedVerdict { Unspecified, Sufficient, Nonexistence, Inconclusive };

std::string verdict_name(ExpectedVerdict v);

// Closed-form randomization of one player, checked at the sample points.
struct ExactRandomization {
    int player = 2;
    std::function<double(double)> rate;
    std::vector<double> points;
    std::vector<Atom> atoms;
};

struct Example {
    std::string id;
    std::string title;
    nlohmann::json config_json;
    ProblemConfig config;                        // grid already built
    std::function<double(double)> exact_value;   // empty when no closed form
    double value_tol = 1e-3;                     // sup-norm tolerance against exact_value
    std::optional<double> exact_threshold;       // D1* = {|x| >= b}
    std::optional<ExactRandomization> exact_randomization;
    bool oracle_check = false;                   // compare with the birth-death chain oracle
    std::optional<double> mc_x0;                 // value check by simulation
    std::vector<double> deviation_x0;            // starting points for deviation tests
    double deviation_scale = 1.0;                // spacing of threshold deviations
    double deviation_dt = 1e-4;                  // step for deviation runs
    std::size_t deviation_paths = 4000;
    double deviation_epsilon = 0.0;              // > 0 selects calibrated strategies
    bool explicit_equilibrium = false;           // randomization formulas apply
    ExpectedVerdict verdict = ExpectedVerdict::Unspecified;
};

std::vector<Example> register_examples();
// Throws ValidationError for an unknown id.
Example find_example(const std::string& id);

// Root of tanh(b*sqrt(2r)) = 2/(b*sqrt(2r)) for the quadratic-payoff example.
double quadratic_threshold(double r);

}  // namespace dynkin
