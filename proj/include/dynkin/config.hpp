#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "dynkin/model.hpp"

namespace dynkin {

struct GridSpec {
    size_t n = 2001;
    std::optional<double> alpha_num, beta_num;
};

struct SolverSettings {
    double tol = 1e-10;
    int max_iter = 100000;
    double eq_tol = 1e-9;
    double mask_tol = 1e-7;
};

struct SimSettings {
    double x0 = 0.0;
    double dt = 1e-3;
    double t_max = 0.0;         // <= 0: chosen from the discount rate
    double band_halfwidth = 0;  // <= 0: default local-time band
    size_t n_paths = 10000;
    std::uint64_t seed = 1;
};

struct ProblemConfig {
    DiffusionSpec diffusion;  // grid filled by build_grid
    PayoffTriple payoffs;
    GridSpec grid;
    SolverSettings solver;
    SimSettings sim;
    double epsilon = 0.05;
};

// Throws ValidationError naming the offending field.
ProblemConfig parse_problem(const nlohmann::json& j);
// Parses text; JSON syntax errors are reported with line and column.
ProblemConfig parse_problem_text(const std::string& text, const std::string& source = "config");
ProblemConfig load_problem(const std::string& path);

// Truncation of an unbounded state interval: widen until the discounted
// payoff envelope at the cut is below 1e-6 of the interior scale.
std::pair<double, double> auto_truncation(const DiffusionSpec& diffusion, const PayoffTriple& payoffs);

// Fills config.diffusion.grid (payoff kinks are placed on nodes) and validates.
void build_grid(ProblemConfig& config);

}  // namespace dynkin
