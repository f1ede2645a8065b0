#include "dynkin/interval_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dynkin {

namespace {

double merge_tol(double x) { return 1e-12 * (1.0 + std::fabs(x)); }

}  // namespace

IntervalSet::IntervalSet(std::vector<Interval> parts) : parts_(std::move(parts)) { normalize(); }

IntervalSet IntervalSet::interval(double lo, double hi) { return IntervalSet({{lo, hi}}); }

IntervalSet IntervalSet::point(double x) { return IntervalSet({{x, x}}); }

void IntervalSet::normalize() {
    std::vector<Interval> in;
    for (auto p : parts_) {
        if (std::isnan(p.lo) || std::isnan(p.hi) || p.hi < p.lo) continue;
        if (p.hi - p.lo < kPointWidth && std::isfinite(p.lo)) {
            double m = 0.5 * (p.lo + p.hi);
            p = {m, m};
        }
        in.push_back(p);
    }
    std::sort(in.begin(), in.end(), [](const Interval& a, const Interval& b) {
        return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
    });
    std::vector<Interval> out;
    for (const auto& p : in) {
        if (!out.empty() && p.lo <= out.back().hi + merge_tol(out.back().hi)) {
            Interval& q = out.back();
            q.hi = std::max(q.hi, p.hi);
        } else {
            out.push_back(p);
        }
    }
    parts_ = std::move(out);
}

bool IntervalSet::contains(double x, double tol) const { return component_of(x, tol) >= 0; }

int IntervalSet::component_of(double x, double tol) const {
    auto it = std::lower_bound(parts_.begin(), parts_.end(), x,
                               [tol](const Interval& p, double v) { return p.hi + tol < v; });
    if (it != parts_.end() && it->lo - tol <= x) return static_cast<int>(it - parts_.begin());
    return -1;
}

bool IntervalSet::interior_contains(double x) const {
    for (const auto& p : parts_)
        if (p.lo < x && x < p.hi) return true;
    return false;
}

double IntervalSet::measure() const {
    double m = 0.0;
    for (const auto& p : parts_) m += p.hi - p.lo;
    return m;
}

std::vector<double> IntervalSet::isolated_points() const {
    std::vector<double> pts;
    for (const auto& p : parts_)
        if (p.is_point()) pts.push_back(p.lo);
    return pts;
}

std::vector<Interval> IntervalSet::intervals() const {
    std::vector<Interval> out;
    for (const auto& p : parts_)
        if (!p.is_point()) out.push_back(p);
    return out;
}

double IntervalSet::distance(double x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : parts_) {
        if (x < p.lo) d = std::min(d, p.lo - x);
        else if (x > p.hi) d = std::min(d, x - p.hi);
        else return 0.0;
    }
    return d;
}

IntervalSet IntervalSet::unite(const IntervalSet& o) const {
    std::vector<Interval> all = parts_;
    all.insert(all.end(), o.parts_.begin(), o.parts_.end());
    return IntervalSet(std::move(all));
}

IntervalSet IntervalSet::intersect(const IntervalSet& o) const {
    std::vector<Interval> out;
    size_t i = 0, j = 0;
    while (i < parts_.size() && j < o.parts_.size()) {
        const auto& a = parts_[i];
        const auto& b = o.parts_[j];
        double lo = std::max(a.lo, b.lo), hi = std::min(a.hi, b.hi);
        if (lo <= hi) out.push_back({lo, hi});
        if (a.hi < b.hi) ++i; else ++j;
    }
    return IntervalSet(std::move(out));
}

IntervalSet IntervalSet::subtract(const IntervalSet& o) const {
    std::vector<Interval> cur = parts_;
    for (const auto& b : o.parts_) {
        std::vector<Interval> next;
        for (const auto& a : cur) {
            if (b.is_point()) {
                bool same = a.is_point() && std::fabs(a.lo - b.lo) <= merge_tol(b.lo);
                if (!same) next.push_back(a);
                continue;
            }
            if (a.hi <= b.lo || a.lo >= b.hi) {
                next.push_back(a);
                continue;
            }
            if (a.lo <= b.lo) next.push_back({a.lo, b.lo});
            if (a.hi >= b.hi) next.push_back({b.hi, a.hi});
        }
        cur = std::move(next);
    }
    return IntervalSet(std::move(cur));
}

IntervalSet IntervalSet::clip(double lo, double hi) const { return intersect(interval(lo, hi)); }

}  // namespace dynkin
