#pragma once

#include <algorithm>
#include <vector>

#include "dynkin/piecewise.hpp"

namespace dynkin {

// Piecewise-linear interpolant of a function sampled on a sorted grid;
// constant functions skip the lookup. Clamped outside the grid.
class GridTable {
public:
    GridTable() = default;
    GridTable(const std::vector<double>& x, const PiecewiseFn& w)
        : x_(x), constant_(w.is_constant()), c_(w(x.front())) {
        if (!constant_) {
            y_.reserve(x.size());
            for (double v : x) y_.push_back(w(v));
        }
        init();
    }
    GridTable(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) { init(); }

    double operator()(double v) const {
        if (constant_) return c_;
        if (v <= x_.front()) return y_.front();
        if (v >= x_.back()) return y_.back();
        size_t i = locate(v);
        double t = (v - x_[i]) / (x_[i + 1] - x_[i]);
        return y_[i] + t * (y_[i + 1] - y_[i]);
    }

    double max_value() const {
        if (constant_) return c_;
        return *std::max_element(y_.begin(), y_.end());
    }

private:
    void init() {
        if (x_.size() > 1) inv_h_ = static_cast<double>(x_.size() - 1) / (x_.back() - x_.front());
    }
    // Cell with x_[i] <= v < x_[i+1], for v strictly inside the grid. The
    // uniform guess is exact up to a few cells on the meshes used here.
    size_t locate(double v) const {
        size_t last = x_.size() - 2;
        auto i = static_cast<size_t>(std::min<double>((v - x_.front()) * inv_h_, static_cast<double>(last)));
        for (int s = 0; s < 4; ++s) {
            if (x_[i] > v)
                --i;
            else if (x_[i + 1] <= v && i < last)
                ++i;
            else
                return i;
        }
        return static_cast<size_t>(std::upper_bound(x_.begin(), x_.end(), v) - x_.begin()) - 1;
    }

    std::vector<double> x_, y_;
    bool constant_ = false;
    double c_ = 0.0;
    double inv_h_ = 0.0;
};

// Mirror a point back into [lo, hi] (reflecting ends).
inline double reflect_into(double v, double lo, double hi) {
    for (int i = 0; i < 8; ++i) {
        if (v < lo)
            v = 2.0 * lo - v;
        else if (v > hi)
            v = 2.0 * hi - v;
        else
            return v;
    }
    return std::clamp(v, lo, hi);
}

}  // namespace dynkin
