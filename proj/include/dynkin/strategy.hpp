#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dynkin/interval_set.hpp"
#include "dynkin/model.hpp"
#include "dynkin/obstacle_solver.hpp"

namespace dynkin {

struct Atom {
    double x;
    double gamma;
};

// Stopping-rate density on a support set.
struct RateTerm {
    IntervalSet support;
    std::function<double(double)> density;
    std::string label;
};

// Markovian randomized stopping: immediate stop on stop_set, hazard
// rate(x) dt plus gamma * dl^x at each atom otherwise.
struct RandomizedStrategy {
    int player = 1;
    IntervalSet stop_set;
    std::vector<RateTerm> rates;
    std::vector<Atom> atoms;
    std::optional<double> epsilon;

    // Largest density among the terms whose support contains x; zero on the
    // interior of the stop set.
    double rate(double x) const;
    bool is_null() const { return stop_set.empty() && rates.empty() && atoms.empty(); }
    // Rates and atoms multiplied by c; the stop set is kept.
    RandomizedStrategy scaled(double c) const;

    static RandomizedStrategy never(int player);
    static RandomizedStrategy stop_on(int player, IntervalSet set);
};

// True iff B5 and B6 are empty on the grid.
bool check_simplified_condition(const RegionPartition& partition);

// Explicit equilibrium when check_simplified_condition holds; throws
// HypothesisViolated otherwise. Returns (player 1, player 2).
std::pair<RandomizedStrategy, RandomizedStrategy> build_nash_strategies(const ValueSolution& sol,
                                                                         const RegionPartition& partition,
                                                                         const PayoffTriple& payoffs,
                                                                         const DiffusionSpec& diffusion);

// Largest interval around x, inside the grid range, on which f and g stay
// within d of their values at x.
std::pair<double, double> exit_interval(double x, double d, const PayoffTriple& payoffs,
                                        const DiffusionSpec& diffusion);

// Payoff envelope E_x[sup e^{-rt}|f| + sup e^{-rt}|g| + sup e^{-rt}|h|] sampled at points and
// inflated by a safety factor; linear in between.
struct Envelope {
    std::vector<double> xs, values;
    double operator()(double x) const;
    double max_over(double lo, double hi) const;
};

struct EnvelopeOptions {
    size_t n_paths = 10000;
    double dt = 0.05;
    double safety = 1.2;
    std::uint64_t seed = 20240611;
};

Envelope estimate_envelope(const PayoffTriple& payoffs, const DiffusionSpec& diffusion, std::vector<double> xs,
                           const EnvelopeOptions& opts = {});

// One checked calibration condition.
struct CalibrationCheck {
    double x = 0.0;
    std::string kind;  // "atom", "boundary-atom", "rate"
    std::string condition;  // which probability condition
    double d = 0.0;
    double k = 0.0;
    double lo = 0.0, hi = 0.0;
    double probability = 0.0;
    double gap = 0.0;
    double product() const { return probability * gap; }
};

struct RateConstant {
    Interval interval;
    double c;
};

struct PlayerCalibration {
    int player = 1;
    IntervalSet randomization_set;
    IntervalSet pure_stop_set;
    std::vector<RateConstant> rate_constants;
    std::vector<Atom> atoms;
    std::vector<CalibrationCheck> checks;  // binding condition per calibrated point
    // d(x) and k(x) of the player's first condition, in original payoff units.
    std::function<double(double)> d_of_x, k_of_x;
};

struct EpsilonCalibration {
    double epsilon = 0.0;
    Envelope envelope;
    PlayerCalibration p1, p2;
};

struct CalibrationOptions {
    double cap = 1e9;
    double start = 1.0 / 1048576.0;  // doubling starts at 2^-20
    size_t local_nodes = 400;
    size_t mc_paths = 2000;
    size_t mc_points = 64;  // max nodes per component checked by simulation
    std::uint64_t seed = 777;
    EnvelopeOptions envelope;
};

struct EpsilonStrategies {
    RandomizedStrategy p1, p2;
    EpsilonCalibration calibration;
};

// Throws CalibrationFailure when the target is not met below the cap.
EpsilonStrategies calibrate_epsilon_strategies(const ValueSolution& sol, const RegionPartition& partition,
                                               const PayoffTriple& payoffs, const DiffusionSpec& diffusion,
                                               double epsilon, const CalibrationOptions& opts = {});

// Probability that the clock of a hazard survives until the walk leaves
// [lo, hi] or time k elapses, started at x. Rates are given per interval,
// atoms smeared over one local cell, `absorbing` stops immediately.
struct LocalHazard {
    std::vector<RateConstant> rates;
    std::vector<Atom> atoms;
    IntervalSet absorbing;
};
double survival_probability(double x, double lo, double hi, double k, const LocalHazard& hazard,
                            const DiffusionSpec& diffusion, size_t nodes = 400);

nlohmann::json strategy_to_json(const RandomizedStrategy& s, const std::vector<double>& grid);

}  // namespace dynkin
