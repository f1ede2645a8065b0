#pragma once

#include <vector>

namespace dynkin {

struct Interval {
    double lo;
    double hi;
    bool is_point() const { return lo == hi; }
    double length() const { return hi - lo; }
};

// Finite union of disjoint closed intervals, kept sorted. Components shorter
// than kPointWidth are stored as isolated points.
class IntervalSet {
public:
    static constexpr double kPointWidth = 1e-6;

    IntervalSet() = default;
    explicit IntervalSet(std::vector<Interval> parts);
    static IntervalSet interval(double lo, double hi);
    static IntervalSet point(double x);

    const std::vector<Interval>& components() const { return parts_; }
    bool empty() const { return parts_.empty(); }
    bool contains(double x, double tol = 0.0) const;
    // Index of the component containing x, or -1.
    int component_of(double x, double tol = 0.0) const;
    bool interior_contains(double x) const;
    double measure() const;
    std::vector<double> isolated_points() const;
    std::vector<Interval> intervals() const;  // non-degenerate components
    double distance(double x) const;

    IntervalSet unite(const IntervalSet& o) const;
    IntervalSet intersect(const IntervalSet& o) const;
    // Removes the open interior of every interval of o, and the isolated
    // points of o from the isolated points of this set.
    IntervalSet subtract(const IntervalSet& o) const;
    IntervalSet clip(double lo, double hi) const;

private:
    void normalize();
    std::vector<Interval> parts_;
};

}  // namespace dynkin
