#pragma once

#include "dynkin/associated_game.hpp"
#include "dynkin/config.hpp"
#include "dynkin/obstacle_solver.hpp"

namespace dynkin {

// Regions, associated payoffs and value of one configured problem.
struct SolvedProblem {
    ProblemConfig config;
    RegionPartition partition;
    AssociatedPayoffs assoc;
    ValueSolution sol;
};

// config.diffusion.grid must already be built.
SolvedProblem solve_problem(const ProblemConfig& config);

}  // namespace dynkin
