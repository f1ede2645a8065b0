#include "dynkin/obstacle_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "dynkin/errors.hpp"

namespace dynkin {

double ValueSolution::value_at(double x) const {
    if (x <= grid.front()) return v.front();
    if (x >= grid.back()) return v.back();
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    size_t i = static_cast<size_t>(it - grid.begin()) - 1;
    double t = (x - grid[i]) / (grid[i + 1] - grid[i]);
    return v[i] + t * (v[i + 1] - v[i]);
}

ValueSolution solve_value(const AssociatedPayoffs& assoc, const DiffusionSpec& diffusion, double tol, int max_iter) {
    if (!(tol > 0.0)) throw ValidationError("solver tol must be > 0");
    const auto& x = assoc.grid;
    size_t n = x.size();
    if (n < 3) throw ValidationError("grid needs at least 3 points");

    ValueSolution sol;
    sol.grid = x;
    sol.f_tilde = assoc.f_tilde;
    sol.g_tilde = assoc.g_tilde;
    sol.r_eff = diffusion.r > 0.0 ? diffusion.r : kZeroRateRegularization;

    auto build = [&](const std::vector<size_t>& nodes) {
        ObstacleProblem p;
        std::vector<double> xs;
        for (size_t k : nodes) {
            xs.push_back(x[k]);
            p.lower.push_back(assoc.f_tilde[k]);
            p.upper.push_back(assoc.g_tilde[k]);
        }
        p.A = build_generator(xs, diffusion, sol.r_eff);
        p.source.assign(xs.size(), 0.0);
        p.left_value = assoc.f_tilde.front();
        p.right_value = assoc.f_tilde.back();
        return p;
    };

    double obstacle_scale = 1.0, op_scale = 0.0;
    Tridiag L = build_generator(x, diffusion, sol.r_eff);
    for (size_t i = 0; i < n; ++i) {
        obstacle_scale = std::max({obstacle_scale, std::fabs(assoc.f_tilde[i]), std::fabs(assoc.g_tilde[i])});
        op_scale = std::max(op_scale, std::fabs(L.diag[i]));
    }
    sol.residual_tol = tol * op_scale * obstacle_scale;

    ObstacleResult res = solve_obstacle_nested(n, build, sol.residual_tol, max_iter);
    sol.v = std::move(res.v);
    sol.Lv = std::move(res.Av);
    sol.residual = std::move(res.residual);
    sol.max_residual = res.max_residual;
    sol.iterations = res.iterations;
    sol.stops = extract_stop_sets(sol, assoc);
    return sol;
}

namespace {

// Contact point near the mask flip between masked node s and continuation
// node s+dir. The mask band biases the flip by up to sqrt(band/curvature) at
// a tangential contact, so the gap is fitted by a least-squares cubic over a
// stretch of continuation nodes and the contact is read off the fit: its
// first zero walking into the mask for a transversal crossing, or its
// minimum when the fit only dips (tangential contact). The estimate may move
// a few cells into the mask.
double refine_flip(const std::vector<double>& x, const std::vector<double>& gap, const std::vector<bool>& mask,
                   size_t s, int dir) {
    long n = static_cast<long>(x.size());
    long run = 0;
    for (long k = static_cast<long>(s) + dir; k >= 0 && k < n && !mask[static_cast<size_t>(k)]; k += dir) ++run;
    long masked = 0;
    for (long k = static_cast<long>(s); k >= 0 && k < n && mask[static_cast<size_t>(k)] && masked < 8; k -= dir)
        ++masked;
    long use = std::min<long>(24, std::max<long>(std::min<long>(run, 4), run / 2));
    double xs = x[s];
    double xc = x[static_cast<size_t>(static_cast<long>(s) + dir)];
    double far = x[static_cast<size_t>(static_cast<long>(s) - dir * (masked - 1))];
    if (use < 4) return 0.5 * (xs + xc);

    // Normal equations for the cubic in t = (x - xs) / h.
    double h = std::fabs(xc - xs);
    Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
    Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
    for (long m = 1; m <= use; ++m) {
        size_t k = static_cast<size_t>(static_cast<long>(s) + dir * m);
        double t = (x[k] - xs) / h;
        Eigen::Vector4d phi(1.0, t, t * t, t * t * t);
        M += phi * phi.transpose();
        rhs += phi * gap[k];
    }
    Eigen::Vector4d c = M.ldlt().solve(rhs);
    auto fit = [&](double xx) {
        double t = (xx - xs) / h;
        return c[0] + t * (c[1] + t * (c[2] + t * c[3]));
    };

    constexpr int samples = 4000;
    double best_x = xc, best_g = fit(xc), root = far;
    bool have_root = false;
    double prev_x = xc, prev_g = best_g;
    for (int k = 1; k <= samples; ++k) {
        double xx = xc + (far - xc) * k / samples;
        double gg = fit(xx);
        if (gg < best_g) {
            best_g = gg;
            best_x = xx;
        }
        if (!have_root && gg <= 0.0 && prev_g > 0.0) {
            double lo = prev_x, hi = xx;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                if (fit(mid) > 0.0) lo = mid; else hi = mid;
            }
            root = 0.5 * (lo + hi);
            have_root = true;
        }
        prev_x = xx;
        prev_g = gg;
    }
    // A minimum strictly inside the window means the fit turns back up:
    // tangential contact at the minimum. Otherwise the gap crosses zero.
    bool interior_min = std::fabs(best_x - far) > 0.01 * std::fabs(far - xc) && best_x != xc;
    if (interior_min) return best_x;
    return have_root ? root : best_x;
}

void mask_to_set(const std::vector<double>& x, const std::vector<double>& gap, const std::vector<bool>& mask,
                 std::vector<double>& boundaries, IntervalSet& set) {
    size_t n = x.size();
    std::vector<Interval> parts;
    size_t i = 0;
    while (i < n) {
        if (!mask[i]) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j + 1 < n && mask[j + 1]) ++j;
        double lo = x.front(), hi = x.back();
        if (i > 0) {
            lo = refine_flip(x, gap, mask, i, -1);
            boundaries.push_back(lo);
        }
        if (j + 1 < n) {
            hi = refine_flip(x, gap, mask, j, +1);
            boundaries.push_back(hi);
        }
        parts.push_back({lo, hi});
        i = j + 1;
    }
    set = IntervalSet(std::move(parts));
}

}  // namespace

StopSets extract_stop_sets(const ValueSolution& sol, const AssociatedPayoffs& assoc, double eq_tol) {
    size_t n = sol.v.size();
    StopSets s;
    s.d1_mask.assign(n, false);
    s.d2_mask.assign(n, false);
    std::vector<double> gap1(n), gap2(n);
    for (size_t i = 0; i < n; ++i) {
        double band = eq_tol * (1.0 + std::fabs(sol.v[i]));
        gap1[i] = sol.v[i] - assoc.f_tilde[i];
        gap2[i] = assoc.g_tilde[i] - sol.v[i];
        s.d1_mask[i] = std::fabs(gap1[i]) <= band;
        s.d2_mask[i] = std::fabs(gap2[i]) <= band;
    }
    mask_to_set(sol.grid, gap1, s.d1_mask, s.d1_boundaries, s.d1_set);
    mask_to_set(sol.grid, gap2, s.d2_mask, s.d2_boundaries, s.d2_set);
    return s;
}

double martingale_tolerance(const ValueSolution& sol) {
    double scale = 1.0;
    for (double v : sol.v) scale = std::max(scale, std::fabs(v));
    return 1e-6 * scale + sol.max_residual;
}

MartingaleReport verify_martingale_conditions(const ValueSolution& sol, const DiffusionSpec& diffusion, double tol) {
    MartingaleReport rep;
    Tridiag L = build_generator(sol.grid, diffusion, sol.r_eff);
    std::vector<double> Lv = L.apply(sol.v);
    for (size_t i = 1; i + 1 < sol.grid.size(); ++i) {
        MartingaleEntry e{sol.grid[i], Lv[i], true, true, true};
        if (!sol.d1_mask()[i]) {
            e.sub_ok = Lv[i] >= -tol;
            rep.worst_sub = std::min(rep.worst_sub, Lv[i]);
        }
        if (!sol.d2_mask()[i]) {
            e.super_ok = Lv[i] <= tol;
            rep.worst_super = std::max(rep.worst_super, Lv[i]);
        }
        double band = 1e-12 * (1.0 + std::fabs(sol.v[i]));
        e.order_ok = sol.f_tilde[i] - band <= sol.v[i] && sol.v[i] <= sol.g_tilde[i] + band;
        if (!(e.sub_ok && e.super_ok && e.order_ok)) {
            rep.pass = false;
            ++rep.failures;
        }
        rep.entries.push_back(e);
    }
    return rep;
}

std::vector<double> brute_force_oracle(const AssociatedPayoffs& assoc, const DiffusionSpec& diffusion,
                                       size_t n_states, double dt, std::vector<double>* states) {
    if (n_states < 3) throw ValidationError("oracle needs at least 3 states");
    double lo = assoc.grid.front(), hi = assoc.grid.back();
    double h = (hi - lo) / static_cast<double>(n_states - 1);
    std::vector<double> y(n_states), ft(n_states), gt(n_states), pu(n_states), pd(n_states);
    auto interp = [&](const std::vector<double>& vals, double at) {
        const auto& g = assoc.grid;
        if (at <= g.front()) return vals.front();
        if (at >= g.back()) return vals.back();
        size_t i = static_cast<size_t>(std::upper_bound(g.begin(), g.end(), at) - g.begin()) - 1;
        double t = (at - g[i]) / (g[i + 1] - g[i]);
        return vals[i] + t * (vals[i + 1] - vals[i]);
    };
    double max_rate = 0.0;
    for (size_t j = 0; j < n_states; ++j) {
        y[j] = (j + 1 == n_states) ? hi : lo + h * static_cast<double>(j);
        ft[j] = interp(assoc.f_tilde, y[j]);
        gt[j] = interp(assoc.g_tilde, y[j]);
        double s = diffusion.sigma(y[j]), m = diffusion.mu(y[j]);
        pu[j] = 0.5 * s * s / (h * h) + std::max(m, 0.0) / h;
        pd[j] = 0.5 * s * s / (h * h) + std::max(-m, 0.0) / h;
        if (j > 0 && j + 1 < n_states) max_rate = std::max(max_rate, pu[j] + pd[j]);
    }
    if (dt <= 0.0) dt = 0.9 / max_rate;
    if (dt * max_rate > 1.0) throw ValidationError("oracle time step too large for a probability chain");
    for (size_t j = 0; j < n_states; ++j) {
        pu[j] *= dt;
        pd[j] *= dt;
    }
    double disc = std::exp(-diffusion.r * dt);
    std::vector<double> V = ft;
    double scale = 1.0;
    for (double v : V) scale = std::max(scale, std::fabs(v));
    const long cap = 4000000;
    for (long sweep = 0;; ++sweep) {
        double change = 0.0;
        for (size_t j = 1; j + 1 < n_states; ++j) {
            double cont = disc * (pu[j] * V[j + 1] + pd[j] * V[j - 1] + (1.0 - pu[j] - pd[j]) * V[j]);
            // Saddle value of the one-step game: max(f, min(g, continuation)).
            double nv = std::clamp(cont, ft[j], gt[j]);
            change = std::max(change, std::fabs(nv - V[j]));
            V[j] = nv;
        }
        if (change <= 1e-13 * scale) break;
        if (sweep >= cap)
            throw NonContraction("value iteration did not contract (last change " + std::to_string(change) + ")",
                                 change);
    }
    if (states) *states = y;
    return V;
}

}  // namespace dynkin
