#include "dynkin/associated_game.hpp"

#include <cmath>

#include "dynkin/errors.hpp"

namespace dynkin {

namespace {

SourceTag tag_for(Region label, bool f_eq_g) {
    switch (label) {
        case Region::B1: return SourceTag::H;
        case Region::B3: return SourceTag::G;
        case Region::B4: return SourceTag::F;
        default: return f_eq_g ? SourceTag::FeqG : SourceTag::Ordered;
    }
}

}  // namespace

std::pair<double, double> associated_values(double f, double g, double h, Region label, bool f_eq_g) {
    switch (tag_for(label, f_eq_g)) {
        case SourceTag::H: return {h, h};
        case SourceTag::G: return {g, g};
        case SourceTag::F: return {f, f};
        case SourceTag::FeqG: return {f, f};
        case SourceTag::Ordered: break;
    }
    return {f, g};
}

AssociatedPayoffs build_associated_payoffs(const PayoffTriple& payoffs, const RegionPartition& partition) {
    AssociatedPayoffs a;
    a.grid = partition.grid;
    size_t n = a.grid.size();
    a.f_tilde.resize(n);
    a.g_tilde.resize(n);
    a.source_tag.resize(n);
    for (size_t i = 0; i < n; ++i) {
        double x = a.grid[i];
        double f = payoffs.f(x), g = payoffs.g(x), h = payoffs.h(x);
        Region label = partition.labels[i];
        auto [ft, gt] = associated_values(f, g, h, label, partition.b_f_eq_g[i]);
        a.f_tilde[i] = ft;
        a.g_tilde[i] = gt;
        a.source_tag[i] = tag_for(label, partition.b_f_eq_g[i]);
        double tol = partition.eq_tol * (1.0 + std::fabs(f) + std::fabs(g) + std::fabs(h));
        if (ft > gt + tol)
            throw OrderingViolation("associated payoffs out of order at x=" + std::to_string(x));
    }
    return a;
}

}  // namespace dynkin
