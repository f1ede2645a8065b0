#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

#include "dynkin/interval_set.hpp"
#include "dynkin/piecewise.hpp"

namespace dynkin {

// dX = mu(X) dt + sigma(X) dW on (alpha, beta), discounted at rate r; grid
// is the computational mesh inside the (truncated) state interval.
struct DiffusionSpec {
    PiecewiseFn mu;
    PiecewiseFn sigma = PiecewiseFn::constant(1.0);
    double r = 0.0;
    double alpha = -std::numeric_limits<double>::infinity();
    double beta = std::numeric_limits<double>::infinity();
    std::vector<double> grid;

    void validate() const;
    double lo() const { return grid.front(); }
    double hi() const { return grid.back(); }
    double min_spacing() const;
};

// n uniform nodes on [lo, hi]; each interior extra point replaces its nearest
// node so kinks land exactly on the mesh.
std::vector<double> make_grid(double lo, double hi, size_t n, std::vector<double> extra = {});

struct PayoffTriple {
    PiecewiseFn f, g, h;

    void validate_on(const std::vector<double>& grid) const;
    std::vector<double> kink_points() const;
};

enum class Region : std::uint8_t { B1 = 1, B2, B3, B4, B5, B6 };

std::string region_name(Region r);

// Exactly one label per triple; values within tol of each other are merged
// into one level of a weak order before the inequality chains are tested.
Region classify_point(double f, double g, double h, double tol);

// Ordering masks consistent with classify_point.
struct OrderFlags {
    bool f_le_g, g_le_f;
};
OrderFlags order_flags(double f, double g, double h, double tol);

struct RegionBoundary {
    double x;
    Region left;
    Region right;
};

struct RegionPartition {
    std::vector<double> grid;
    std::vector<Region> labels;
    std::vector<bool> b_f_le_g, b_g_le_f, b_f_eq_g;
    std::vector<RegionBoundary> boundaries;  // one per label change between nodes
    double eq_tol = 1e-9;

    bool any(std::initializer_list<Region> rs) const;
    bool has(size_t i, std::initializer_list<Region> rs) const;
    // Closed-interval representation of the union of the given regions, with
    // ends at the refined boundaries.
    IntervalSet region_set(std::initializer_list<Region> rs) const;
    // Same set with components that reach a grid end extended past it, for
    // subtracting a strict (open) region without leaving the grid ends behind.
    IntervalSet open_region_set(std::initializer_list<Region> rs) const;
};

// eq_tol is relative: the equality band at x is eq_tol*(1+|f|+|g|+|h|).
RegionPartition classify_regions(const PayoffTriple& payoffs, const std::vector<double>& grid,
                                 double eq_tol = 1e-9);

// (L - r) w (x) = mu w' + sigma^2 w''/2 - r w, off kinks.
double apply_generator(const PiecewiseFn& w, const DiffusionSpec& diffusion, double x);

// w'(xi+) - w'(xi-).
double kink_jump(const PiecewiseFn& w, double xi);

}  // namespace dynkin
