#include "dynkin/pipeline.hpp"

namespace dynkin {

SolvedProblem solve_problem(const ProblemConfig& config) {
    SolvedProblem s;
    s.config = config;
    const auto& grid = config.diffusion.grid;
    s.partition = classify_regions(config.payoffs, grid, config.solver.eq_tol);
    s.assoc = build_associated_payoffs(config.payoffs, s.partition);
    s.sol = solve_value(s.assoc, config.diffusion, config.solver.tol, config.solver.max_iter);
    if (config.solver.mask_tol != kDefaultMaskTol) s.sol.stops = extract_stop_sets(s.sol, s.assoc, config.solver.mask_tol);
    return s;
}

}  // namespace dynkin
