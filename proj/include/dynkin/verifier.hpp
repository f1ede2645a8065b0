#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dynkin/model.hpp"
#include "dynkin/obstacle_solver.hpp"
#include "dynkin/pipeline.hpp"
#include "dynkin/strategy.hpp"

namespace dynkin {

struct BestResponseSolution {
    int player = 1;
    std::vector<double> grid;
    std::vector<double> w;                   // responder's optimal value
    std::vector<bool> response_stop_mask;    // stopping now is optimal (outside the opponent's stop set)
    std::vector<double> gain;                // improvement over the equilibrium payoff; empty if none given
    double max_gain = 0.0;
    double max_gain_x = 0.0;
    double residual_tol = 0.0;               // absolute complementarity tolerance used
};

// Single obstacle problem of the responder against a fixed Markovian
// randomized strategy. The opponent's rate kills toward g (player 1 responds)
// or f (player 2 responds); atoms add killing Gamma*sigma^2/dx on the cell of
// the nearest node. On the opponent's stop set the responder gets max(g, h)
// (player 1) or min(f, h) (player 2). tol is relative, as in solve_value.
// When equilibrium_value is given, gain = w - V for player 1, V - w for
// player 2.
BestResponseSolution best_response_value(const RandomizedStrategy& opponent, const PayoffTriple& payoffs,
                                         const DiffusionSpec& diffusion, int player, double tol = kDefaultSolverTol,
                                         const std::vector<double>* equilibrium_value = nullptr);

// Best-response gains of both players against a strategy pair, with a
// discretization allowance 2*tol + |gain(dx) - gain(2dx)| (first-order
// Richardson estimate of C*dx from the every-second-node subgrid).
struct EquilibriumCheck {
    double max_gain_p1 = 0.0, max_gain_p2 = 0.0;
    double x_p1 = 0.0, x_p2 = 0.0;
    double allowance_p1 = 0.0, allowance_p2 = 0.0;
    bool pass = false;
};

EquilibriumCheck check_equilibrium_gains(const SolvedProblem& problem,
                                         const std::pair<RandomizedStrategy, RandomizedStrategy>& strategies,
                                         double tol = kDefaultSolverTol);

// D1* avoids B3 and B6, and D2* avoids B4 and B5, on the grid nodes.
bool check_pure_ne_sufficient(const ValueSolution& sol, const RegionPartition& partition);

struct PureNeVerdict {
    bool sufficient_holds = false;
    bool nonexistence_holds = false;
    bool inconclusive = true;
    std::optional<double> witness_x;
    std::string condition;  // "i" or "ii" when nonexistence fires
    double margin = 0.0;    // excess of the stopping value over the immediate payoff at the witness
};

// Condition (i): on each component of B4 u B5, sup over stops strictly before
// exit of E[e^{-rt} f(X)] exceeds f v g somewhere. Condition (ii): on B3 u B6,
// the inf of E[e^{-rt} g(X)] falls below f ^ g. Component ends get the limit
// payoff as a Dirichlet value; a grid end that truncates a component is
// reflecting. tol is relative to 1 + |payoff|.
PureNeVerdict check_pure_ne_nonexistence(const PayoffTriple& payoffs, const DiffusionSpec& diffusion,
                                         const RegionPartition& partition, double tol = 1e-6);

// Both tests; inconclusive when neither holds.
PureNeVerdict pure_ne_verdict(const SolvedProblem& problem, double tol = 1e-6);

// {sufficient, nonexistence, inconclusive, witness_x, condition, max_gain_p1, max_gain_p2}.
nlohmann::json verdict_to_json(const PureNeVerdict& v, const std::optional<EquilibriumCheck>& gains);

}  // namespace dynkin
