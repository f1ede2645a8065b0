#pragma once

#include <vector>

#include "dynkin/associated_game.hpp"
#include "dynkin/fd_operator.hpp"
#include "dynkin/interval_set.hpp"
#include "dynkin/model.hpp"

namespace dynkin {

struct StopSets {
    std::vector<bool> d1_mask, d2_mask;
    std::vector<double> d1_boundaries, d2_boundaries;
    IntervalSet d1_set, d2_set;
};

struct ValueSolution {
    std::vector<double> grid;
    std::vector<double> v;
    std::vector<double> f_tilde, g_tilde;
    std::vector<double> Lv;  // discrete (L - r) v, zero at the ends
    std::vector<double> residual;
    StopSets stops;
    double r_eff = 0.0;
    int iterations = 0;
    double max_residual = 0.0;
    double residual_tol = 0.0;

    const std::vector<bool>& d1_mask() const { return stops.d1_mask; }
    const std::vector<bool>& d2_mask() const { return stops.d2_mask; }
    // Linear interpolation of v.
    double value_at(double x) const;
};

constexpr double kDefaultSolverTol = 1e-10;
constexpr double kDefaultMaskTol = 1e-7;
constexpr double kZeroRateRegularization = 1e-12;

// tol is relative to the operator scale max|diag(L_h)|*(1+max|obstacle|).
ValueSolution solve_value(const AssociatedPayoffs& assoc, const DiffusionSpec& diffusion,
                          double tol = kDefaultSolverTol, int max_iter = 100000);

// Masks {|v - f~| <= eq_tol(1+|v|)}, {|v - g~| <= eq_tol(1+|v|)}; each mask
// flip is refined inside its cell from a quadratic fit of the gap on the
// continuation side.
StopSets extract_stop_sets(const ValueSolution& sol, const AssociatedPayoffs& assoc,
                           double eq_tol = kDefaultMaskTol);

struct MartingaleEntry {
    double x;
    double Lv;
    bool sub_ok;    // L_h v >= -tol off D1
    bool super_ok;  // L_h v <= tol off D2
    bool order_ok;  // f~ <= v <= g~
};

struct MartingaleReport {
    std::vector<MartingaleEntry> entries;
    bool pass = true;
    double worst_sub = 0.0;    // most negative L_h v off D1
    double worst_super = 0.0;  // most positive L_h v off D2
    size_t failures = 0;
};

// 1e-6 * max(1, max|v|) plus the achieved complementarity residual.
double martingale_tolerance(const ValueSolution& sol);

// tol is absolute (units of L_h v).
MartingaleReport verify_martingale_conditions(const ValueSolution& sol, const DiffusionSpec& diffusion,
                                              double tol);

// Value iteration on a birth-death chain with n_states uniform states over
// the grid range; dt <= 0 picks the largest stable step.
std::vector<double> brute_force_oracle(const AssociatedPayoffs& assoc, const DiffusionSpec& diffusion,
                                       size_t n_states, double dt = 0.0, std::vector<double>* states = nullptr);

}  // namespace dynkin
