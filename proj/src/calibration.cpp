#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/random/normal_distribution.hpp>

#include "dynkin/errors.hpp"
#include "dynkin/fd_operator.hpp"
#include "dynkin/grid_table.hpp"
#include "dynkin/parallel.hpp"
#include "dynkin/rng.hpp"
#include "dynkin/strategy.hpp"

namespace dynkin {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double Envelope::operator()(double x) const {
    if (xs.empty()) return 0.0;
    if (x <= xs.front()) return values.front();
    if (x >= xs.back()) return values.back();
    size_t i = static_cast<size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
    double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    return values[i] + t * (values[i + 1] - values[i]);
}

double Envelope::max_over(double lo, double hi) const {
    double m = std::max((*this)(lo), (*this)(hi));
    for (size_t i = 0; i < xs.size(); ++i)
        if (xs[i] > lo && xs[i] < hi) m = std::max(m, values[i]);
    return m;
}

Envelope estimate_envelope(const PayoffTriple& payoffs, const DiffusionSpec& diffusion, std::vector<double> xs,
                           const EnvelopeOptions& opts) {
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    Envelope env;
    env.xs = xs;
    env.values.assign(xs.size(), 0.0);
    if (xs.empty()) return env;

    const auto& grid = diffusion.grid;
    std::vector<double> af(grid.size()), ag(grid.size()), ah(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        double x = grid[i];
        af[i] = std::fabs(payoffs.f(x));
        ag[i] = std::fabs(payoffs.g(x));
        ah[i] = std::fabs(payoffs.h(x));
    }
    GridTable tf(grid, af), tg(grid, ag), th(grid, ah), mu(grid, diffusion.mu), sigma(grid, diffusion.sigma);
    double r = diffusion.r;
    // e^{-rT} * max payoff < 1e-3 * max payoff
    double horizon = r > 0.0 ? std::log(1e3) / r : 100.0;
    auto steps = static_cast<size_t>(std::ceil(horizon / opts.dt));
    double sq = std::sqrt(opts.dt), decay = std::exp(-r * opts.dt);
    double lo = diffusion.lo(), hi = diffusion.hi();

    double mf = tf.max_value(), mg = tg.max_value(), mh = th.max_value();

    parallel_for(xs.size(), [&](size_t pi) {
        double sum = 0.0;
        boost::random::normal_distribution<double> normal;
        for (size_t p = 0; p < opts.n_paths; ++p) {
            auto eng = make_engine(opts.seed, pi * opts.n_paths + p, Stream::Envelope);
            double x = xs[pi], disc = 1.0;
            double sf = tf(x), sg = tg(x), sh = th(x);
            for (size_t s = 0; s < steps; ++s) {
                x = reflect_into(x + mu(x) * opts.dt + sigma(x) * sq * normal(eng), lo, hi);
                disc *= decay;
                sf = std::max(sf, disc * tf(x));
                sg = std::max(sg, disc * tg(x));
                sh = std::max(sh, disc * th(x));
                // No later point can raise any of the suprema.
                if (disc * mf <= sf && disc * mg <= sg && disc * mh <= sh) break;
            }
            sum += sf + sg + sh;
        }
        env.values[pi] = opts.safety * sum / static_cast<double>(opts.n_paths);
    });
    return env;
}

double survival_probability(double x, double lo, double hi, double k, const LocalHazard& hazard,
                            const DiffusionSpec& diffusion, size_t nodes) {
    double dlo = diffusion.lo(), dhi = diffusion.hi();
    lo = std::max(lo, dlo);
    hi = std::min(hi, dhi);
    if (!(lo < hi)) throw DegenerateInterval("survival_probability: empty interval");
    bool refl_l = lo <= dlo, refl_r = hi >= dhi;
    if ((x <= lo && !refl_l) || (x >= hi && !refl_r)) return 1.0;
    if (hazard.absorbing.contains(x)) return 0.0;
    if (!(k > 0.0)) return 1.0;

    std::vector<double> extra{x};
    auto inside = [&](double y) { return y > lo && y < hi; };
    for (const auto& a : hazard.atoms)
        if (inside(a.x)) extra.push_back(a.x);
    for (const auto& c : hazard.absorbing.components())
        for (double e : {c.lo, c.hi})
            if (inside(e)) extra.push_back(e);
    for (const auto& rc : hazard.rates)
        for (double e : {rc.interval.lo, rc.interval.hi})
            if (inside(e)) extra.push_back(e);
    auto xg = make_grid(lo, hi, std::max<size_t>(nodes, 5), extra);
    size_t n = xg.size();

    // Killing per node: rate weighted by the covered part of the control
    // volume, atoms spread over the volume of their node.
    std::vector<double> kill(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double a = i == 0 ? xg[0] : 0.5 * (xg[i - 1] + xg[i]);
        double b = i + 1 == n ? xg[n - 1] : 0.5 * (xg[i] + xg[i + 1]);
        if (b <= a) continue;
        for (const auto& rc : hazard.rates) {
            double ov = std::min(b, rc.interval.hi) - std::max(a, rc.interval.lo);
            if (ov > 0.0) kill[i] += rc.c * ov / (b - a);
        }
    }
    bool any_kill = false;
    for (const auto& at : hazard.atoms) {
        if (at.x < lo || at.x > hi || at.gamma <= 0.0) continue;
        auto it = std::lower_bound(xg.begin(), xg.end(), at.x);
        size_t i = static_cast<size_t>(it - xg.begin());
        if (i == n || (i > 0 && at.x - xg[i - 1] < xg[i] - at.x)) --i;
        double s = diffusion.sigma(at.x);
        double a = i == 0 ? xg[0] : 0.5 * (xg[i - 1] + xg[i]);
        double b = i + 1 == n ? xg[n - 1] : 0.5 * (xg[i] + xg[i + 1]);
        kill[i] += at.gamma * s * s / (b - a);
    }
    for (double v : kill) any_kill = any_kill || v > 0.0;

    std::vector<bool> absorbed(n, false);
    bool any_absorbing = false;
    for (size_t i = 0; i < n; ++i) {
        absorbed[i] = hazard.absorbing.contains(xg[i]);
        any_absorbing = any_absorbing || absorbed[i];
    }
    if (refl_l && refl_r && !any_kill && !any_absorbing) return 1.0;

    Tridiag A = build_generator(xg, diffusion, 0.0, kill);
    // System rows: a u_{i-1} + b u_i + c u_{i+1} = rhs.
    std::vector<double> ra(n, 0.0), rb(n, 0.0), rc(n, 0.0), rhs(n, 0.0);
    auto set_rows = [&](double dt) {
        for (size_t i = 0; i < n; ++i) {
            ra[i] = rc[i] = 0.0;
            if (absorbed[i]) {
                rb[i] = 1.0;
                continue;
            }
            bool end_l = i == 0, end_r = i + 1 == n;
            double la, lb, lc;
            if (end_l || end_r) {
                if ((end_l && !refl_l) || (end_r && !refl_r)) {
                    rb[i] = 1.0;
                    continue;
                }
                // Zero flux: ghost node mirrored across the end.
                double h = end_l ? xg[1] - xg[0] : xg[n - 1] - xg[n - 2];
                double s = diffusion.sigma(xg[i]);
                double off = s * s / (h * h);
                la = end_r ? off : 0.0;
                lc = end_l ? off : 0.0;
                lb = -off - kill[i];
            } else {
                la = A.lower[i];
                lb = A.diag[i];
                lc = A.upper[i];
            }
            if (dt > 0.0) {
                ra[i] = -dt * la;
                rb[i] = 1.0 - dt * lb;
                rc[i] = -dt * lc;
            } else {
                ra[i] = la;
                rb[i] = lb;
                rc[i] = lc;
            }
        }
    };
    auto boundary_rhs = [&](std::vector<double>& out, const std::vector<double>* prev) {
        for (size_t i = 0; i < n; ++i) {
            if (absorbed[i])
                out[i] = 0.0;
            else if ((i == 0 && !refl_l) || (i + 1 == n && !refl_r))
                out[i] = 1.0;
            else
                out[i] = prev ? (*prev)[i] : 0.0;
        }
    };

    double span = hi - lo;
    double smin = kInf;
    for (double v : xg) smin = std::min(smin, std::fabs(diffusion.sigma(v)));
    double exit_scale = span * span / std::max(smin * smin, 1e-300);
    // A longer horizon only raises the survival probability, so a large k
    // can be replaced by infinity.
    bool finite_k = std::isfinite(k) && (k < 50.0 * exit_scale || (refl_l && refl_r));

    std::vector<double> u;
    if (!finite_k) {
        set_rows(0.0);
        boundary_rhs(rhs, nullptr);
        u = thomas_solve(ra, rb, rc, rhs);
    } else {
        const size_t nt = 200;
        double dt = k / static_cast<double>(nt);
        set_rows(dt);
        u.assign(n, 1.0);
        for (size_t i = 0; i < n; ++i)
            if (absorbed[i]) u[i] = 0.0;
        for (size_t s = 0; s < nt; ++s) {
            boundary_rhs(rhs, &u);
            u = thomas_solve(ra, rb, rc, rhs);
        }
    }
    auto it = std::lower_bound(xg.begin(), xg.end(), x);
    size_t i = static_cast<size_t>(it - xg.begin());
    if (i < n && xg[i] == x) return std::clamp(u[i], 0.0, 1.0);
    if (i == 0) return std::clamp(u[0], 0.0, 1.0);
    if (i == n) return std::clamp(u[n - 1], 0.0, 1.0);
    double t = (x - xg[i - 1]) / (xg[i] - xg[i - 1]);
    return std::clamp(u[i - 1] + t * (u[i] - u[i - 1]), 0.0, 1.0);
}

namespace {

// The randomizing player's view, written as Player 2 (the minimizer). For
// Player 1 the payoffs are mirrored: F = -g, G = -f.
struct Side {
    int player;
    IntervalSet randomize, stop, other;
    PiecewiseFn F, G;
};

struct Condition {
    std::string name;
    double d, k, lo, hi, gap;
};

struct PointConditions {
    double x;
    std::vector<Condition> conds;
};

class Calibrator {
public:
    Calibrator(const PayoffTriple& payoffs, const DiffusionSpec& diffusion, const Envelope& env, double epsilon,
               const CalibrationOptions& opts)
        : payoffs_(payoffs), diffusion_(diffusion), env_(env), eps_(epsilon), opts_(opts) {}

    // d and k of the "value + eps/4 >= 0" branch.
    std::pair<double, double> dk_upper(double v) const {
        if (v + eps_ / 4.0 >= 0.0) return {eps_ / 4.0, kInf};
        double r = diffusion_.r;
        return {eps_ / 8.0, r > 0.0 ? std::log((v + eps_ / 8.0) / (v + eps_ / 4.0)) / r : kInf};
    }
    // d and k of the "value - eps/4 <= 0" branch.
    std::pair<double, double> dk_lower(double v) const {
        if (v - eps_ / 4.0 <= 0.0) return {eps_ / 4.0, kInf};
        double r = diffusion_.r;
        return {eps_ / 8.0, r > 0.0 ? std::log((v - eps_ / 8.0) / (v - eps_ / 4.0)) / r : kInf};
    }

    PointConditions conditions(const Side& side, double x) const {
        PointConditions pc{x, {}};
        auto add = [&](const std::string& name, std::pair<double, double> dk, double sign, double v) {
            auto [lo, hi] = exit_interval(x, dk.first, payoffs_, diffusion_);
            double gap = env_.max_over(lo, hi) + sign * v - eps_ / 4.0;
            pc.conds.push_back({name, dk.first, dk.second, lo, hi, gap});
        };
        if (side.other.contains(x, 1e-12 * (1.0 + std::fabs(x)))) {
            double F = side.F(x);
            add("both-stop", dk_upper(F), -1.0, F);
        } else {
            double G = side.G(x);
            add("other-waits-upper", dk_upper(G), -1.0, G);
            // The extra horizon of half the other player's hitting time is
            // dropped: it can only lower the probability, so this is a
            // sufficient condition.
            add("other-waits-lower", dk_lower(G), +1.0, G);
        }
        return pc;
    }

    // Worst product minus eps/4; <= 0 means the conditions hold.
    double excess(const PointConditions& pc, const LocalHazard& hz, std::vector<CalibrationCheck>* out,
                  const std::string& kind) const {
        double worst = -kInf;
        for (const auto& c : pc.conds) {
            double p = c.gap > 0.0 ? survival_probability(pc.x, c.lo, c.hi, c.k, hz, diffusion_, opts_.local_nodes)
                                   : 0.0;
            double prod = p * std::max(c.gap, 0.0);
            worst = std::max(worst, prod - eps_ / 4.0);
            if (out) out->push_back({pc.x, kind, c.name, c.d, c.k, c.lo, c.hi, p, c.gap});
        }
        return worst;
    }

    // Smallest power of two times opts.start, not below `from`, for which the
    // conditions at pc hold.
    template <class MakeHazard>
    double doubling(const PointConditions& pc, MakeHazard make, double from) const {
        double v = std::max(from, opts_.start);
        for (;;) {
            if (excess(pc, make(v), nullptr, "") <= 0.0) return v;
            v *= 2.0;
            if (v > opts_.cap)
                throw CalibrationFailure("calibration target not met below the rate cap at x=" +
                                             std::to_string(pc.x),
                                         pc.x);
        }
    }

    PlayerCalibration calibrate(const Side& side) const {
        PlayerCalibration pc;
        pc.player = side.player;
        pc.randomization_set = side.randomize;
        pc.pure_stop_set = side.stop;
        double lo = diffusion_.lo(), hi = diffusion_.hi();
        auto at_end = [&](double e) {
            double t = 1e-12 * (1.0 + std::fabs(e));
            return e <= lo + t || e >= hi - t;
        };

        for (double x : side.randomize.isolated_points()) {
            auto conds = conditions(side, x);
            auto make = [&](double gamma) { return LocalHazard{{}, {{x, gamma}}, side.stop}; };
            double gamma = doubling(conds, make, 0.0);
            pc.atoms.push_back({x, gamma});
            excess(conds, make(gamma), &pc.checks, "atom");
        }

        for (const auto& comp : side.randomize.intervals()) {
            // An open end of a randomization interval would need an unbounded
            // rate (the walk spends little time inside), so each end that is
            // neither absorbing nor a truncation point carries an atom.
            std::vector<Atom> atoms;
            for (double e : {comp.lo, comp.hi}) {
                if (at_end(e) || side.stop.contains(e, 1e-9 * (1.0 + std::fabs(e)))) continue;
                auto conds = conditions(side, e);
                auto make = [&](double gamma) { return LocalHazard{{}, {{e, gamma}}, side.stop}; };
                double gamma = doubling(conds, make, 0.0);
                atoms.push_back({e, gamma});
                excess(conds, make(gamma), &pc.checks, "boundary-atom");
            }

            std::vector<double> xs;
            for (double v : diffusion_.grid)
                if (v > comp.lo && v < comp.hi) xs.push_back(v);
            xs.insert(xs.begin(), comp.lo);
            xs.push_back(comp.hi);
            std::vector<PointConditions> conds(xs.size());
            parallel_for(xs.size(), [&](size_t i) { conds[i] = conditions(side, xs[i]); });
            auto make = [&](double c) { return LocalHazard{{{comp, c}}, atoms, side.stop}; };

            // A strided subsample sets the starting level, the full sweep
            // then only doubles where a node still fails.
            size_t stride = std::max<size_t>(1, xs.size() / std::max<size_t>(1, opts_.mc_points));
            std::vector<double> seeds;
            for (size_t i = 0; i < xs.size(); i += stride) seeds.push_back(static_cast<double>(i));
            std::vector<double> level(seeds.size());
            parallel_for(seeds.size(),
                         [&](size_t j) { level[j] = doubling(conds[static_cast<size_t>(seeds[j])], make, 0.0); });
            double c = opts_.start;
            for (double v : level) c = std::max(c, v);
            for (const auto& pcond : conds) c = doubling(pcond, make, c);

            // Record the binding node at the final level.
            size_t worst = 0;
            double worst_excess = -kInf;
            std::vector<double> ex(xs.size());
            parallel_for(xs.size(), [&](size_t i) { ex[i] = excess(conds[i], make(c), nullptr, ""); });
            for (size_t i = 0; i < xs.size(); ++i)
                if (ex[i] > worst_excess) {
                    worst_excess = ex[i];
                    worst = i;
                }
            excess(conds[worst], make(c), &pc.checks, "rate");
            pc.rate_constants.push_back({comp, c});
            pc.atoms.insert(pc.atoms.end(), atoms.begin(), atoms.end());
        }
        std::sort(pc.atoms.begin(), pc.atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });

        Side s = side;
        Calibrator self = *this;
        pc.d_of_x = [s, self](double x) {
            bool both = s.other.contains(x, 1e-12 * (1.0 + std::fabs(x)));
            return self.dk_upper(both ? s.F(x) : s.G(x)).first;
        };
        pc.k_of_x = [s, self](double x) {
            bool both = s.other.contains(x, 1e-12 * (1.0 + std::fabs(x)));
            return self.dk_upper(both ? s.F(x) : s.G(x)).second;
        };
        return pc;
    }

private:
    PayoffTriple payoffs_;
    DiffusionSpec diffusion_;
    Envelope env_;
    double eps_;
    CalibrationOptions opts_;
};

RandomizedStrategy to_strategy(const PlayerCalibration& pc, double epsilon) {
    RandomizedStrategy s;
    s.player = pc.player;
    s.stop_set = pc.pure_stop_set;
    s.epsilon = epsilon;
    for (const auto& rc : pc.rate_constants) {
        double c = rc.c;
        s.rates.push_back({IntervalSet::interval(rc.interval.lo, rc.interval.hi), [c](double) { return c; },
                           "calibrated"});
    }
    s.atoms = pc.atoms;
    return s;
}

// Pointwise maximum of the calibrated and the explicit intensities.
void dominate(RandomizedStrategy& s, const RandomizedStrategy& nash) {
    for (const auto& t : nash.rates) s.rates.push_back(t);
    for (const auto& a : nash.atoms) {
        auto it = std::find_if(s.atoms.begin(), s.atoms.end(), [&](const Atom& b) {
            return std::fabs(a.x - b.x) <= 1e-12 * (1.0 + std::fabs(a.x));
        });
        if (it != s.atoms.end())
            it->gamma = std::max(it->gamma, a.gamma);
        else
            s.atoms.push_back(a);
    }
    std::sort(s.atoms.begin(), s.atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
}

}  // namespace

EpsilonStrategies calibrate_epsilon_strategies(const ValueSolution& sol, const RegionPartition& partition,
                                               const PayoffTriple& payoffs, const DiffusionSpec& diffusion,
                                               double epsilon, const CalibrationOptions& opts) {
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
    double lo = diffusion.lo(), hi = diffusion.hi();
    const IntervalSet& d1 = sol.stops.d1_set;
    const IntervalSet& d2 = sol.stops.d2_set;

    Side p2{2, d2.intersect(partition.region_set({Region::B4, Region::B5})),
            d2.subtract(partition.open_region_set({Region::B4, Region::B5})).clip(lo, hi), d1, payoffs.f, payoffs.g};
    Side p1{1, d1.intersect(partition.region_set({Region::B3, Region::B6})),
            d1.subtract(partition.open_region_set({Region::B3, Region::B6})).clip(lo, hi), d2,
            PiecewiseFn::combine(-1.0, payoffs.g, 0.0, payoffs.g),
            PiecewiseFn::combine(-1.0, payoffs.f, 0.0, payoffs.f)};

    // Envelope samples: a coarse sweep of the range plus five points over
    // each randomization component.
    std::vector<double> xs;
    for (int i = 0; i <= 4; ++i) xs.push_back(lo + (hi - lo) * i / 4.0);
    for (const Side* s : {&p1, &p2}) {
        for (const auto& c : s->randomize.components()) {
            if (c.is_point()) {
                xs.push_back(c.lo);
                continue;
            }
            for (int i = 0; i <= 4; ++i) xs.push_back(c.lo + (c.hi - c.lo) * i / 4.0);
        }
    }
    EpsilonStrategies out;
    out.calibration.epsilon = epsilon;
    if (p1.randomize.empty() && p2.randomize.empty()) xs.clear();
    out.calibration.envelope = estimate_envelope(payoffs, diffusion, xs, opts.envelope);

    Calibrator cal(payoffs, diffusion, out.calibration.envelope, epsilon, opts);
    out.calibration.p1 = cal.calibrate(p1);
    out.calibration.p2 = cal.calibrate(p2);
    out.p1 = to_strategy(out.calibration.p1, epsilon);
    out.p2 = to_strategy(out.calibration.p2, epsilon);
    if (check_simplified_condition(partition)) {
        auto [n1, n2] = build_nash_strategies(sol, partition, payoffs, diffusion);
        dominate(out.p1, n1);
        dominate(out.p2, n2);
    }
    return out;
}

}  // namespace dynkin
