#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dynkin/examples.hpp"
#include "dynkin/pipeline.hpp"
#include "dynkin/strategy.hpp"

namespace dynkin {

// Equilibrium strategies of a solved problem: explicit when the simplified
// condition holds, calibrated at epsilon otherwise.
std::pair<RandomizedStrategy, RandomizedStrategy> equilibrium_strategies(const SolvedProblem& problem,
                                                                         double epsilon);

// Check keys, in summary-table order.
extern const std::vector<std::string> kRegressionChecks;

struct CheckResult {
    std::string key;  // one of kRegressionChecks
    double value = 0.0;      // measured quantity
    double threshold = 0.0;  // pass iff value <= threshold (booleans use 0/1)
    bool pass = false;
    std::string detail;
};

// Overrides of the registry's simulation settings; unset fields keep them.
struct RegressionOptions {
    std::optional<size_t> mc_paths;
    std::optional<double> mc_dt;
    std::optional<size_t> deviation_paths;
    std::optional<double> deviation_dt;
    std::optional<std::uint64_t> seed;
    bool simulate = true;  // false skips the Monte Carlo checks
};

struct ExampleRegression {
    std::string id;
    double solve_seconds = 0.0;
    std::vector<CheckResult> checks;

    bool pass() const;
    const CheckResult* find(const std::string& key) const;
};

// Every check that applies to the example: value against the closed form,
// randomization formulas, threshold, Monte Carlo value, deviation gains,
// martingale certificate, pure-equilibrium verdict and chain oracle.
ExampleRegression run_regression(const Example& ex, const RegressionOptions& opts = {});

// One row per example: id, v_sup_error, mc_gap, deviation_excess, then
// pass/fail per check (empty when not applicable), then overall.
std::string regression_summary_csv(const std::vector<ExampleRegression>& runs);

nlohmann::json regression_to_json(const ExampleRegression& run);

}  // namespace dynkin
