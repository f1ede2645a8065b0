#pragma once

#include <vector>

#include "dynkin/model.hpp"

namespace dynkin {

// Which original payoff supplies the common value where g <= f.
enum class SourceTag : std::uint8_t { Ordered, H, G, F, FeqG };

struct AssociatedPayoffs {
    std::vector<double> grid;
    std::vector<double> f_tilde, g_tilde;
    std::vector<SourceTag> source_tag;
};

// Common value of the reordered game at a point with the given label, or
// (f, g) where f < g. Returns {f_tilde, g_tilde}.
std::pair<double, double> associated_values(double f, double g, double h, Region label, bool f_eq_g);

AssociatedPayoffs build_associated_payoffs(const PayoffTriple& payoffs, const RegionPartition& partition);

}  // namespace dynkin
