#include "dynkin/fd_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynkin/errors.hpp"

namespace dynkin {

std::vector<double> Tridiag::apply(const std::vector<double>& v) const {
    size_t n = diag.size();
    std::vector<double> out(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i) out[i] = lower[i] * v[i - 1] + diag[i] * v[i] + upper[i] * v[i + 1];
    return out;
}

Tridiag build_generator(const std::vector<double>& x, const DiffusionSpec& diffusion, double r,
                        const std::vector<double>& killing) {
    size_t n = x.size();
    Tridiag t;
    t.lower.assign(n, 0.0);
    t.diag.assign(n, 0.0);
    t.upper.assign(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i) {
        double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
        double s = diffusion.sigma(x[i]);
        double m = diffusion.mu(x[i]);
        double a = s * s / (hl * (hl + hr)) + std::max(-m, 0.0) / hl;
        double c = s * s / (hr * (hl + hr)) + std::max(m, 0.0) / hr;
        double k = killing.empty() ? 0.0 : killing[i];
        t.lower[i] = a;
        t.upper[i] = c;
        t.diag[i] = -(a + c) - r - k;
    }
    return t;
}

double cell_width(const std::vector<double>& x, size_t i) {
    size_t n = x.size();
    double lo = x[i == 0 ? 0 : i - 1], hi = x[i + 1 == n ? n - 1 : i + 1];
    return 0.5 * (hi - lo);
}

std::vector<double> thomas_solve(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                                 std::vector<double> d) {
    size_t n = b.size();
    for (size_t i = 1; i < n; ++i) {
        double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1] / b[n - 1];
    for (size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
    return x;
}

std::vector<double> complementarity_residual(const std::vector<double>& v, const std::vector<double>& Av,
                                             const std::vector<double>& lower, const std::vector<double>& upper) {
    size_t n = v.size();
    std::vector<double> res(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i) {
        // Distance from the complementarity set: min over the three cases.
        double at_lower = std::fabs(v[i] - lower[i]) + std::max(Av[i], 0.0);
        double at_upper = std::fabs(v[i] - upper[i]) + std::max(-Av[i], 0.0);
        double inside = std::fabs(Av[i]) + std::max(lower[i] - v[i], 0.0) + std::max(v[i] - upper[i], 0.0);
        double r = std::min({at_lower, at_upper, inside});
        res[i] = std::isfinite(r) ? r : inside;
    }
    return res;
}

namespace {

std::vector<double> evaluate(const ObstacleProblem& p, const std::vector<double>& v) {
    std::vector<double> Av = p.A.apply(v);
    for (size_t i = 1; i + 1 < v.size(); ++i) Av[i] += p.source[i];
    return Av;
}

std::vector<double> solve_policy(const ObstacleProblem& p, const std::vector<NodeState>& st) {
    size_t n = st.size();
    std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), d(n, 0.0);
    d[0] = p.left_value;
    d[n - 1] = p.right_value;
    if (p.left_reflecting) {
        c[0] = -1.0;
        d[0] = 0.0;
    }
    if (p.right_reflecting) {
        a[n - 1] = -1.0;
        d[n - 1] = 0.0;
    }
    for (size_t i = 1; i + 1 < n; ++i) {
        if (st[i] == NodeState::Lower) {
            d[i] = p.lower[i];
        } else if (st[i] == NodeState::Upper) {
            d[i] = p.upper[i];
        } else {
            a[i] = p.A.lower[i];
            b[i] = p.A.diag[i];
            c[i] = p.A.upper[i];
            d[i] = -p.source[i];
        }
    }
    return thomas_solve(a, b, c, d);
}

void projected_sor(const ObstacleProblem& p, std::vector<double>& v, double tol, int max_iter, int& iters) {
    size_t n = v.size();
    constexpr double omega = 1.5;
    for (int it = 0; it < max_iter; ++it, ++iters) {
        double change = 0.0;
        for (size_t i = 1; i + 1 < n; ++i) {
            double gs = -(p.A.lower[i] * v[i - 1] + p.A.upper[i] * v[i + 1] + p.source[i]) / p.A.diag[i];
            double nv = v[i] + omega * (gs - v[i]);
            nv = std::clamp(nv, p.lower[i], p.upper[i]);
            change = std::max(change, std::fabs(nv - v[i]) * std::fabs(p.A.diag[i]));
            v[i] = nv;
        }
        if (p.left_reflecting) v[0] = v[1];
        if (p.right_reflecting) v[n - 1] = v[n - 2];
        if (change <= 0.1 * tol) return;
    }
}

}  // namespace

ObstacleResult solve_obstacle(const ObstacleProblem& p, double tol, int max_iter,
                              const std::vector<NodeState>* initial) {
    size_t n = p.A.size();
    for (size_t i = 0; i < n; ++i)
        if (p.lower[i] > p.upper[i]) throw ObstacleCrossing("lower obstacle above upper at node " + std::to_string(i));

    double cscale = 1.0;
    for (size_t i = 1; i + 1 < n; ++i) cscale = std::max(cscale, std::fabs(p.A.diag[i]));

    ObstacleResult res;
    std::vector<NodeState> st(n, NodeState::Continue);
    if (initial && initial->size() == n) st = *initial;
    std::vector<double> v = solve_policy(p, st);
    const int pdas_cap = std::min(max_iter, 500);
    bool settled = false;
    for (int it = 0; it < pdas_cap; ++it) {
        ++res.iterations;
        std::vector<double> Av = evaluate(p, v);
        std::vector<NodeState> next(n, NodeState::Continue);
        for (size_t i = 1; i + 1 < n; ++i) {
            double m = (st[i] == NodeState::Continue) ? 0.0 : Av[i];
            // Roundoff-sized violations do not switch the state; without this
            // band nodes at a tangential contact flip back and forth forever.
            double band = 1e-12 * cscale * (1.0 + std::fabs(v[i]));
            if (-m + cscale * (p.lower[i] - v[i]) > band)
                next[i] = NodeState::Lower;
            else if (m + cscale * (v[i] - p.upper[i]) > band)
                next[i] = NodeState::Upper;
        }
        if (next == st) {
            settled = true;
            break;
        }
        st = std::move(next);
        v = solve_policy(p, st);
    }
    for (size_t i = 1; i + 1 < n; ++i) v[i] = std::clamp(v[i], p.lower[i], p.upper[i]);
    if (p.left_reflecting) v[0] = v[1];
    if (p.right_reflecting) v[n - 1] = v[n - 2];
    std::vector<double> Av = evaluate(p, v);
    res.residual = complementarity_residual(v, Av, p.lower, p.upper);
    res.max_residual = *std::max_element(res.residual.begin(), res.residual.end());
    if (!settled || res.max_residual > tol) {
        res.used_fallback = true;
        for (size_t i = 1; i + 1 < n; ++i) v[i] = std::clamp(v[i], p.lower[i], p.upper[i]);
        projected_sor(p, v, tol, max_iter, res.iterations);
        Av = evaluate(p, v);
        res.residual = complementarity_residual(v, Av, p.lower, p.upper);
        res.max_residual = *std::max_element(res.residual.begin(), res.residual.end());
        if (res.max_residual > tol)
            throw NonConvergence("obstacle solver did not converge (max residual " +
                                     std::to_string(res.max_residual) + ")",
                                 res.max_residual);
    }
    res.state.assign(n, NodeState::Continue);
    for (size_t i = 1; i + 1 < n; ++i) {
        if (v[i] == p.lower[i]) res.state[i] = NodeState::Lower;
        else if (v[i] == p.upper[i]) res.state[i] = NodeState::Upper;
    }
    res.v = std::move(v);
    res.Av = std::move(Av);
    return res;
}

ObstacleResult solve_obstacle_nested(size_t n, const ProblemBuilder& build, double tol, int max_iter) {
    std::vector<size_t> all(n);
    for (size_t i = 0; i < n; ++i) all[i] = i;
    // Levels of every second node down to a few hundred nodes.
    std::vector<std::vector<size_t>> levels{all};
    while (levels.back().size() > 300) {
        const auto& fine = levels.back();
        std::vector<size_t> coarse;
        for (size_t k = 0; k < fine.size(); k += 2) coarse.push_back(fine[k]);
        if (coarse.back() != fine.back()) coarse.push_back(fine.back());
        levels.push_back(std::move(coarse));
    }
    std::vector<NodeState> guess;
    for (size_t L = levels.size(); L-- > 1;) {
        const auto& nodes = levels[L];
        ObstacleProblem p = build(nodes);
        std::vector<NodeState> st;
        try {
            st = solve_obstacle(p, tol, max_iter, guess.empty() ? nullptr : &guess).state;
        } catch (const NonConvergence&) {
            st.assign(nodes.size(), NodeState::Continue);
        }
        // Prolongate: a fine node between two coarse nodes inherits their
        // common state, otherwise starts in the continuation state.
        const auto& fine = levels[L - 1];
        guess.assign(fine.size(), NodeState::Continue);
        size_t c = 0;
        for (size_t j = 0; j < fine.size(); ++j) {
            while (c + 1 < nodes.size() && nodes[c + 1] <= fine[j]) ++c;
            if (nodes[c] == fine[j]) guess[j] = st[c];
            else if (c + 1 < nodes.size() && st[c] == st[c + 1]) guess[j] = st[c];
        }
    }
    return solve_obstacle(build(all), tol, max_iter, guess.empty() ? nullptr : &guess);
}

}  // namespace dynkin
