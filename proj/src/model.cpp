#include "dynkin/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dynkin/errors.hpp"

namespace dynkin {

void DiffusionSpec::validate() const {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError("diffusion.r must be a finite number >= 0");
    if (!(alpha < beta)) throw ValidationError("diffusion: alpha must be < beta");
    if (grid.size() < 3) throw ValidationError("grid needs at least 3 points");
    for (size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) throw ValidationError("grid points must be finite");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw ValidationError("grid must be strictly increasing");
        if (!(grid[i] >= alpha && grid[i] <= beta))
            throw ValidationError("grid point " + std::to_string(grid[i]) + " lies outside (alpha, beta)");
        double s = sigma(grid[i]);
        if (!(s > 0.0) || !std::isfinite(s))
            throw ValidationError("sigma must be > 0 on the grid (x=" + std::to_string(grid[i]) + ")");
        if (!std::isfinite(mu(grid[i]))) throw ValidationError("mu must be finite on the grid");
    }
}

double DiffusionSpec::min_spacing() const {
    double m = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < grid.size(); ++i) m = std::min(m, grid[i] - grid[i - 1]);
    return m;
}

std::vector<double> make_grid(double lo, double hi, size_t n, std::vector<double> extra) {
    if (n < 3) throw ValidationError("grid.n must be >= 3");
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
        throw ValidationError("grid bounds must be finite with alpha_num < beta_num");
    std::vector<double> x(n);
    double h = (hi - lo) / static_cast<double>(n - 1);
    for (size_t i = 0; i < n; ++i) x[i] = lo + h * static_cast<double>(i);
    x.back() = hi;
    std::sort(extra.begin(), extra.end());
    std::vector<bool> pinned(n, false);
    pinned[0] = pinned[n - 1] = true;
    for (double p : extra) {
        if (!(p > lo && p < hi)) continue;
        auto i = static_cast<size_t>(std::llround((p - lo) / h));
        i = std::clamp<size_t>(i, 0, n - 1);
        if (pinned[i]) {
            if (std::fabs(x[i] - p) <= 1e-12 * (1.0 + std::fabs(p))) continue;
            // Nearest node is taken: insert instead.
            x.push_back(p);
            continue;
        }
        x[i] = p;
        pinned[i] = true;
    }
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
    return x;
}

void PayoffTriple::validate_on(const std::vector<double>& grid) const {
    for (double x : grid) {
        if (!std::isfinite(f(x)) || !std::isfinite(g(x)) || !std::isfinite(h(x)))
            throw ValidationError("payoffs must be finite on the grid (x=" + std::to_string(x) + ")");
    }
}

std::vector<double> PayoffTriple::kink_points() const {
    std::vector<double> xs;
    for (const auto* w : {&f, &g, &h})
        for (const auto& k : w->kinks()) xs.push_back(k.x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

std::string region_name(Region r) { return "B" + std::to_string(static_cast<int>(r)); }

namespace {

// Ranks of (f, g, h) in the weak order obtained by merging values closer
// than tol (chained).
std::array<int, 3> weak_ranks(double f, double g, double h, double tol) {
    std::array<double, 3> v{f, g, h};
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::array<int, 3> rank{};
    int r = 0;
    rank[idx[0]] = 0;
    for (int k = 1; k < 3; ++k) {
        if (v[idx[k]] - v[idx[k - 1]] > tol) ++r;
        rank[idx[k]] = r;
    }
    return rank;
}

}  // namespace

Region classify_point(double f, double g, double h, double tol) {
    auto rk = weak_ranks(f, g, h, tol);
    int F = rk[0], G = rk[1], H = rk[2];
    std::array<bool, 6> m{
        G <= H && H <= F,
        (F <= H && H < G) || (F < H && H <= G),
        H < G && G < F,
        G < F && F < H,
        F <= G && G < H,
        H < F && F <= G,
    };
    int found = -1;
    for (int i = 0; i < 6; ++i) {
        if (!m[i]) continue;
        if (found >= 0) throw ClassificationConflict("overlapping region chains");
        found = i;
    }
    if (found < 0) throw ClassificationConflict("no region chain matches");
    return static_cast<Region>(found + 1);
}

OrderFlags order_flags(double f, double g, double h, double tol) {
    auto rk = weak_ranks(f, g, h, tol);
    return {rk[0] <= rk[1], rk[1] <= rk[0]};
}

bool RegionPartition::any(std::initializer_list<Region> rs) const {
    for (Region l : labels)
        for (Region r : rs)
            if (l == r) return true;
    return false;
}

bool RegionPartition::has(size_t i, std::initializer_list<Region> rs) const {
    for (Region r : rs)
        if (labels[i] == r) return true;
    return false;
}

IntervalSet RegionPartition::region_set(std::initializer_list<Region> rs) const {
    // boundary_after[i] is the refined switch point inside cell (i, i+1).
    std::vector<double> boundary_after(grid.size(), 0.0);
    size_t b = 0;
    for (size_t i = 0; i + 1 < grid.size(); ++i) {
        if (labels[i] != labels[i + 1]) boundary_after[i] = boundaries[b++].x;
    }
    std::vector<Interval> parts;
    size_t i = 0;
    while (i < grid.size()) {
        if (!has(i, rs)) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j + 1 < grid.size() && has(j + 1, rs)) ++j;
        double lo = (i == 0) ? grid[0] : boundary_after[i - 1];
        double hi = (j + 1 == grid.size()) ? grid.back() : boundary_after[j];
        parts.push_back({lo, hi});
        i = j + 1;
    }
    return IntervalSet(std::move(parts));
}

IntervalSet RegionPartition::open_region_set(std::initializer_list<Region> rs) const {
    double lo = grid.front(), hi = grid.back();
    double pad = 1.0 + (hi - lo);
    std::vector<Interval> parts = region_set(rs).components();
    for (auto& c : parts) {
        if (c.lo <= lo) c.lo = lo - pad;
        if (c.hi >= hi) c.hi = hi + pad;
    }
    return IntervalSet(std::move(parts));
}

RegionPartition classify_regions(const PayoffTriple& payoffs, const std::vector<double>& grid, double eq_tol) {
    if (!(eq_tol >= 0.0)) throw ValidationError("eq_tol must be >= 0");
    RegionPartition p;
    p.grid = grid;
    p.eq_tol = eq_tol;
    // Boundaries are located with exact comparisons so that they sit on the
    // true crossings rather than on the edge of the equality band.
    auto label_at = [&](double x) { return classify_point(payoffs.f(x), payoffs.g(x), payoffs.h(x), 0.0); };
    size_t n = grid.size();
    p.labels.resize(n);
    p.b_f_le_g.resize(n);
    p.b_g_le_f.resize(n);
    p.b_f_eq_g.resize(n);
    for (size_t i = 0; i < n; ++i) {
        double x = grid[i];
        double f = payoffs.f(x), g = payoffs.g(x), h = payoffs.h(x);
        if (!std::isfinite(f) || !std::isfinite(g) || !std::isfinite(h))
            throw ValidationError("payoffs must be finite on the grid (x=" + std::to_string(x) + ")");
        double tol = eq_tol * (1.0 + std::fabs(f) + std::fabs(g) + std::fabs(h));
        p.labels[i] = classify_point(f, g, h, tol);
        auto fl = order_flags(f, g, h, tol);
        p.b_f_le_g[i] = fl.f_le_g;
        p.b_g_le_f[i] = fl.g_le_f;
        p.b_f_eq_g[i] = fl.f_le_g && fl.g_le_f;
    }
    for (size_t i = 0; i + 1 < n; ++i) {
        if (p.labels[i] == p.labels[i + 1]) continue;
        double lo = grid[i], hi = grid[i + 1];
        Region left = p.labels[i];
        for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
            double mid = 0.5 * (lo + hi);
            if (label_at(mid) == left) lo = mid; else hi = mid;
        }
        p.boundaries.push_back({0.5 * (lo + hi), left, p.labels[i + 1]});
    }
    return p;
}

double apply_generator(const PiecewiseFn& w, const DiffusionSpec& diffusion, double x) {
    Jet j = w.jet(x);
    double s = diffusion.sigma(x);
    return diffusion.mu(x) * j.d1 + 0.5 * s * s * j.d2 - diffusion.r * j.v;
}

double kink_jump(const PiecewiseFn& w, double xi) {
    const Kink* k = w.find_kink(xi);
    if (!k) throw NotAKink("x=" + std::to_string(xi) + " is not a kink");
    return k->right_slope - k->left_slope;
}

}  // namespace dynkin
