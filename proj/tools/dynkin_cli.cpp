// Command-line front end: solve, strategies, simulate, verify, examples, all.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "dynkin/errors.hpp"
#include "dynkin/examples.hpp"
#include "dynkin/io.hpp"
#include "dynkin/regression.hpp"
#include "dynkin/simulator.hpp"
#include "dynkin/verifier.hpp"

using namespace dynkin;

namespace {

enum Exit { kOk = 0, kValidation = 1, kSolver = 2, kRegression = 3 };

struct Manifest {
    std::string mode = "solve";
    std::string config_path;
    std::string example_id;
    std::string out = "out";
    std::optional<size_t> grid_n;
    std::optional<double> tol;
    std::optional<double> epsilon;
    std::optional<size_t> paths;
    std::optional<double> dt;
    std::optional<std::uint64_t> seed;
};

void apply_overrides(ProblemConfig& cfg, const Manifest& m) {
    if (m.tol) {
        if (!(*m.tol > 0.0)) throw ValidationError("--tol: must be > 0");
        cfg.solver.tol = *m.tol;
    }
    if (m.epsilon) {
        if (!(*m.epsilon > 0.0)) throw ValidationError("--epsilon: must be > 0");
        cfg.epsilon = *m.epsilon;
    }
    if (m.paths) {
        if (*m.paths < 1) throw ValidationError("--paths: must be >= 1");
        cfg.sim.n_paths = *m.paths;
    }
    if (m.dt) {
        if (!(*m.dt > 0.0)) throw ValidationError("--dt: must be > 0");
        cfg.sim.dt = *m.dt;
    }
    if (m.seed) cfg.sim.seed = *m.seed;
    if (m.grid_n) {
        if (*m.grid_n < 3) throw ValidationError("--grid-n: must be >= 3");
        cfg.grid.n = *m.grid_n;
    }
    build_grid(cfg);
}

ProblemConfig load_config(const Manifest& m) {
    if (!m.config_path.empty() && !m.example_id.empty())
        throw ValidationError("give either --config or --example, not both");
    ProblemConfig cfg;
    if (!m.config_path.empty())
        cfg = load_problem(m.config_path);
    else if (!m.example_id.empty())
        cfg = find_example(m.example_id).config;
    else
        throw ValidationError("mode '" + m.mode + "' needs --config or --example");
    apply_overrides(cfg, m);
    return cfg;
}

std::string path_in(const Manifest& m, const std::string& name) { return m.out + "/" + name; }

void run_solve(const SolvedProblem& s, const Manifest& m) {
    write_text(path_in(m, "value.csv"), value_csv(s));
    write_json(path_in(m, "boundaries.json"), boundaries_json(s.sol));
    std::printf("solve: %zu nodes, %d iterations, max residual %.3g\n", s.sol.grid.size(), s.sol.iterations,
                s.sol.max_residual);
}

void run_strategies(const SolvedProblem& s, const Manifest& m) {
    auto pair = equilibrium_strategies(s, s.config.epsilon);
    const auto& grid = s.config.diffusion.grid;
    write_json(path_in(m, "strategy_p1.json"), strategy_to_json(pair.first, grid));
    write_json(path_in(m, "strategy_p2.json"), strategy_to_json(pair.second, grid));
    write_text(path_in(m, "strategies.csv"), strategy_csv(pair, grid));
    std::printf("strategies: %s\n", check_simplified_condition(s.partition) ? "explicit" : "calibrated");
}

void run_simulate(const SolvedProblem& s, const Manifest& m) {
    const auto& cfg = s.config;
    auto pair = equilibrium_strategies(s, cfg.epsilon);
    SimParams p;
    p.dt = cfg.sim.dt;
    p.t_max = cfg.sim.t_max;
    p.band_halfwidth = cfg.sim.band_halfwidth;
    p.n_paths = cfg.sim.n_paths;
    p.seed = cfg.sim.seed;
    auto rep = run_game(cfg.diffusion, cfg.payoffs, pair, cfg.sim.x0, p);
    auto j = report_to_json(rep);
    j["value_at_x0"] = s.sol.value_at(cfg.sim.x0);
    write_json(path_in(m, "report.json"), j);
    std::printf("simulate: J(%g) = %.6f +- %.6f, V = %.6f\n", cfg.sim.x0, rep.estimate, rep.std_error,
                s.sol.value_at(cfg.sim.x0));
}

void run_verify(const SolvedProblem& s, const Manifest& m) {
    const auto& cfg = s.config;
    auto pair = equilibrium_strategies(s, cfg.epsilon);
    auto verdict = pure_ne_verdict(s);
    auto gains = check_equilibrium_gains(s, pair, cfg.solver.tol);
    write_json(path_in(m, "verdict.json"), verdict_to_json(verdict, gains));
    auto br1 = best_response_value(pair.second, cfg.payoffs, cfg.diffusion, 1, cfg.solver.tol, &s.sol.v);
    auto br2 = best_response_value(pair.first, cfg.payoffs, cfg.diffusion, 2, cfg.solver.tol, &s.sol.v);
    write_text(path_in(m, "best_response.csv"), best_response_csv(br1, br2));
    std::printf("verify: sufficient=%d nonexistence=%d inconclusive=%d, gains %.3g / %.3g\n",
                verdict.sufficient_holds, verdict.nonexistence_holds, verdict.inconclusive, gains.max_gain_p1,
                gains.max_gain_p2);
}

int run_examples(const Manifest& m) {
    RegressionOptions opts;
    opts.mc_paths = m.paths;
    opts.deviation_paths = m.paths;
    opts.mc_dt = m.dt;
    opts.deviation_dt = m.dt;
    opts.seed = m.seed;
    std::vector<ExampleRegression> runs;
    nlohmann::json all = nlohmann::json::array();
    for (auto& ex : register_examples()) {
        if (!m.example_id.empty() && ex.id != m.example_id) continue;
        if (m.grid_n || m.tol || m.epsilon) apply_overrides(ex.config, Manifest{.grid_n = m.grid_n, .tol = m.tol,
                                                                                 .epsilon = m.epsilon});
        auto r = run_regression(ex, opts);
        for (const auto& c : r.checks)
            std::printf("%s %-13s %s  value %.4g  threshold %.4g  %s\n", r.id.c_str(), c.key.c_str(),
                        c.pass ? "pass" : "FAIL", c.value, c.threshold, c.detail.c_str());
        all.push_back(regression_to_json(r));
        runs.push_back(std::move(r));
    }
    if (runs.empty()) throw ValidationError("unknown example id '" + m.example_id + "'");
    std::string table = regression_summary_csv(runs);
    write_text(path_in(m, "examples_summary.csv"), table);
    write_json(path_in(m, "examples.json"), all);
    std::cout << table;
    for (const auto& r : runs)
        if (!r.pass()) return kRegression;
    return kOk;
}

int run(const Manifest& m) {
    if (m.mode == "examples") return run_examples(m);
    SolvedProblem s = solve_problem(load_config(m));
    if (m.mode == "solve" || m.mode == "all") run_solve(s, m);
    if (m.mode == "strategies" || m.mode == "all") run_strategies(s, m);
    if (m.mode == "simulate" || m.mode == "all") run_simulate(s, m);
    if (m.mode == "verify" || m.mode == "all") run_verify(s, m);
    if (m.mode == "all" && !m.example_id.empty()) return run_examples(m);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solver and simulator for zero-sum Dynkin games on one-dimensional diffusions"};
    Manifest m;
    app.add_option("--mode", m.mode, "solve, strategies, simulate, verify, examples or all")
        ->check(CLI::IsMember({"solve", "strategies", "simulate", "verify", "examples", "all"}));
    app.add_option("--config", m.config_path, "problem config JSON");
    app.add_option("--example", m.example_id, "built-in example id (ex_4_2 ... ex_5_4)");
    app.add_option("--out", m.out, "output directory")->capture_default_str();
    app.add_option("--grid-n", m.grid_n, "number of grid nodes");
    app.add_option("--tol", m.tol, "relative solver tolerance");
    app.add_option("--epsilon", m.epsilon, "epsilon for calibrated strategies");
    app.add_option("--paths", m.paths, "Monte Carlo paths");
    app.add_option("--dt", m.dt, "simulation time step");
    app.add_option("--seed", m.seed, "random seed");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }
    try {
        return run(m);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const NonConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kSolver;
    } catch (const CalibrationFailure& e) {
        std::cerr << "calibration failed: " << e.what() << " (at x = " << e.point << ")\n";
        return kSolver;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    }
}
