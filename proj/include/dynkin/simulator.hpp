#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dynkin/model.hpp"
#include "dynkin/strategy.hpp"

namespace dynkin {

struct SimParams {
    double dt = 1e-3;
    double t_max = 0.0;           // <= 0: chosen from the discount rate
    double band_halfwidth = 0.0;  // <= 0: max(2 sqrt(dt) sigma(y), grid spacing) per atom
    size_t n_paths = 10000;
    std::uint64_t seed = 1;

    void validate() const;
};

// Horizon with e^{-r t} * max|payoff| below 1e-3 of max|payoff| (1000 time
// units when r = 0).
double default_horizon(const DiffusionSpec& diffusion);

// Local-time band half-width at y.
double local_time_band(const DiffusionSpec& diffusion, double y, const SimParams& params);

// Paths regenerated on demand from (seed, path index).
class PathBatch {
public:
    PathBatch(DiffusionSpec diffusion, double x0, SimParams params);
    size_t size() const { return params_.n_paths; }
    size_t steps() const { return steps_; }
    double dt() const { return params_.dt; }
    // X_0 .. X_steps of path i.
    std::vector<double> path(size_t i) const;

private:
    DiffusionSpec diffusion_;
    double x0_;
    SimParams params_;
    size_t steps_;
};

PathBatch simulate_paths(const DiffusionSpec& diffusion, double x0, SimParams params);

// dl_k = sigma^2(y) / (2h) * dt * 1{|X_k - y| < h}, one entry per step.
std::vector<double> approx_local_time(const std::vector<double>& path, double y, const DiffusionSpec& diffusion,
                                      const SimParams& params);

enum class Outcome : std::uint8_t { P1First, P2First, Simultaneous, Censored };

struct OutcomeCounts {
    size_t p1_first = 0, p2_first = 0, simultaneous = 0, horizon_censored = 0;
    size_t total() const { return p1_first + p2_first + simultaneous + horizon_censored; }
};

struct SimulationReport {
    double x0 = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    OutcomeCounts counts;
    // Mean discounted payoff over the paths with each outcome (0 if none).
    double mean_p1_first = 0.0, mean_p2_first = 0.0, mean_simultaneous = 0.0;
    double max_abs_payoff = 0.0;      // largest |discounted payoff| of a path
    size_t hazard_decreases = 0;      // steps where an accumulator went down
    SimParams params;
};

// Per-path discounted payoffs, in path order.
struct PathOutcomes {
    std::vector<double> payoff;
    std::vector<Outcome> outcome;
    size_t hazard_decreases = 0;
};

PathOutcomes simulate_game(const DiffusionSpec& diffusion, const PayoffTriple& payoffs,
                           const std::pair<RandomizedStrategy, RandomizedStrategy>& strategies, double x0,
                           const SimParams& params);

// Throws PreconditionFailure for r = 0 unless both stop sets are nonempty.
SimulationReport run_game(const DiffusionSpec& diffusion, const PayoffTriple& payoffs,
                          const std::pair<RandomizedStrategy, RandomizedStrategy>& strategies, double x0,
                          const SimParams& params);

struct Deviation {
    std::string label;
    RandomizedStrategy strategy;
};

struct DeviationEntry {
    std::string label;
    double value = 0.0;  // J with the deviation
    double gain = 0.0;   // improvement for the deviating player
    double std_error = 0.0;
};

struct DeviationReport {
    int player = 1;
    double x0 = 0.0;
    double equilibrium_value = 0.0;
    double equilibrium_se = 0.0;
    std::vector<DeviationEntry> entries;
    double max_gain = 0.0;
    double max_gain_se = 0.0;
    std::string argmax;
};

// Common random numbers: every deviation sees the same noise and clocks.
DeviationReport estimate_deviation_gain(const DiffusionSpec& diffusion, const PayoffTriple& payoffs,
                                        const std::pair<RandomizedStrategy, RandomizedStrategy>& strategies,
                                        const std::vector<Deviation>& deviations, int player, double x0,
                                        const SimParams& params);

// Immediate stop, never stop, exits from (x0 - s, x0 + s) for s in
// scale * {1/16, 1/8, 1/4, 3/8, 1/2, 3/4, 1, 3/2}, and the equilibrium
// strategy with rates and atoms halved.
std::vector<Deviation> standard_deviations(const RandomizedStrategy& equilibrium, int player, double x0,
                                           double scale, double lo, double hi);

nlohmann::json report_to_json(const SimulationReport& r);
nlohmann::json deviation_to_json(const DeviationReport& r);

}  // namespace dynkin
