#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dynkin/model.hpp"

namespace dynkin {

// Row i: lower[i]*v[i-1] + diag[i]*v[i] + upper[i]*v[i+1]. Rows 0 and n-1
// are left empty (Dirichlet ends).
struct Tridiag {
    std::vector<double> lower, diag, upper;
    size_t size() const { return diag.size(); }
    std::vector<double> apply(const std::vector<double>& v) const;
};

// Upwind drift, central diffusion, minus (r + killing) on a nonuniform grid.
// The result is an M-matrix whenever r + killing > 0.
Tridiag build_generator(const std::vector<double>& x, const DiffusionSpec& diffusion, double r,
                        const std::vector<double>& killing = {});

// Control-volume width of node i: half the distance between its neighbours.
double cell_width(const std::vector<double>& x, size_t i);

// Solves a tridiagonal system in place of rhs (Thomas algorithm).
std::vector<double> thomas_solve(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                                 std::vector<double> rhs);

enum class NodeState : std::int8_t { Continue = 0, Lower = 1, Upper = 2 };

// Find v with lower <= v <= upper and, at interior nodes, A v + s <= 0 where
// v > lower, A v + s >= 0 where v < upper (complementarity). Obstacles may be
// infinite. Ends are Dirichlet unless marked reflecting (v_0 = v_1).
struct ObstacleProblem {
    Tridiag A;
    std::vector<double> source;
    std::vector<double> lower, upper;
    double left_value = 0.0;
    double right_value = 0.0;
    bool left_reflecting = false;
    bool right_reflecting = false;
};

struct ObstacleResult {
    std::vector<double> v;
    std::vector<double> Av;  // A v + s, zero at the ends
    std::vector<NodeState> state;
    std::vector<double> residual;
    double max_residual = 0.0;
    int iterations = 0;
    bool used_fallback = false;
};

// Primal-dual active set iteration with a projected SOR fallback; throws
// NonConvergence if the residual is above tol after max_iter sweeps.
ObstacleResult solve_obstacle(const ObstacleProblem& p, double tol, int max_iter,
                              const std::vector<NodeState>* initial = nullptr);

// Builds the problem restricted to a subset of the nodes of the full grid.
using ProblemBuilder = std::function<ObstacleProblem(const std::vector<size_t>& nodes)>;

// Nested iteration: the active set found on successively finer subgrids
// seeds the next level, so the free boundary needs only a few sweeps to
// settle on the full grid.
ObstacleResult solve_obstacle_nested(size_t n, const ProblemBuilder& build, double tol, int max_iter);

// Pointwise complementarity residual of a candidate v.
std::vector<double> complementarity_residual(const std::vector<double>& v, const std::vector<double>& Av,
                                             const std::vector<double>& lower, const std::vector<double>& upper);

}  // namespace dynkin
