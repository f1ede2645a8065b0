// Drives the dynkin executable as a subprocess.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "dynkin/examples.hpp"
#include "dynkin/io.hpp"
#include "dynkin/pipeline.hpp"

using namespace dynkin;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("dynkin_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args, const fs::path& log) {
    std::string cmd = std::string(DYNKIN_CLI) + " " + args + " > " + log.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("value CSV re-parses to the in-process solution bit for bit") {
    auto dir = scratch("roundtrip");
    Example ex = find_example("ex_4_4");
    write_json((dir / "ex_4_4.json").string(), ex.config_json);
    REQUIRE(run_cli("--mode solve --config " + (dir / "ex_4_4.json").string() + " --out " + (dir / "a").string(),
                    dir / "log") == 0);
    auto table = parse_csv(read_text((dir / "a" / "value.csv").string()));
    auto s = solve_problem(ex.config);
    CHECK(same_bits(table.column("v"), s.sol.v));
    CHECK(same_bits(table.column("x"), s.sol.grid));

    // The example id path gives the same file.
    REQUIRE(run_cli("--mode solve --example ex_4_4 --out " + (dir / "b").string(), dir / "log") == 0);
    CHECK(read_text((dir / "a" / "value.csv").string()) == read_text((dir / "b" / "value.csv").string()));
    auto bounds = nlohmann::json::parse(read_text((dir / "a" / "boundaries.json").string()));
    CHECK(bounds.contains("d1_boundaries"));
}

TEST_CASE("grid override changes the grid") {
    auto dir = scratch("grid");
    REQUIRE(run_cli("--mode solve --example ex_4_2 --grid-n 601 --out " + dir.string(), dir / "log") == 0);
    CHECK(parse_csv(read_text((dir / "value.csv").string())).rows.size() == 601);
}

TEST_CASE("malformed config exits 1 with a diagnostic") {
    auto dir = scratch("bad");
    write_text((dir / "syntax.json").string(), "{\"diffusion\": {\"r\": 0.1},\n \"payoffs\": {\"f\": \"x\", \"g\": }\n}");
    CHECK(run_cli("--mode solve --config " + (dir / "syntax.json").string() + " --out " + dir.string(),
                  dir / "log") == 1);
    CHECK(read_text((dir / "log").string()).find("line 2") != std::string::npos);

    write_text((dir / "field.json").string(), R"({"diffusion": {"r": 0.1}, "payoffs": {"f": "x", "g": "x+1"}})");
    CHECK(run_cli("--mode solve --config " + (dir / "field.json").string() + " --out " + dir.string(),
                  dir / "log") == 1);
    CHECK(read_text((dir / "log").string()).find("\"h\"") != std::string::npos);

    CHECK(run_cli("--mode solve --example ex_9_9 --out " + dir.string(), dir / "log") == 1);
    CHECK(run_cli("--mode nonsense", dir / "log") == 1);
    CHECK(run_cli("--mode solve --out " + dir.string(), dir / "log") == 1);
}

TEST_CASE("solver non-convergence exits 2") {
    auto dir = scratch("nonconv");
    write_text((dir / "c.json").string(), R"cfg({"diffusion": {"r": 0.1},
      "payoffs": {"f": "abs(x)+1", "g": "x^2+abs(x)+1", "h": "2+abs(x)"},
      "grid": {"n": 2001, "alpha_num": -3, "beta_num": 3}, "solver": {"max_iter": 1}})cfg");
    CHECK(run_cli("--mode solve --config " + (dir / "c.json").string() + " --out " + dir.string(), dir / "log") == 2);
}

TEST_CASE("examples mode on ex_4_4 passes with reduced paths") {
    auto dir = scratch("examples");
    CHECK(run_cli("--mode examples --example ex_4_4 --paths 2000 --dt 1e-3 --out " + dir.string(), dir / "log") == 0);
    std::string summary = read_text((dir / "examples_summary.csv").string());
    CHECK(summary.rfind("id,v_sup_error,mc_gap,deviation_excess,", 0) == 0);
    auto row = summary.substr(summary.find('\n') + 1);
    CHECK(row.rfind("ex_4_4,", 0) == 0);
    CHECK(row.find(",pass\n") != std::string::npos);
    CHECK(row.find("fail") == std::string::npos);
}

TEST_CASE("verify on ex_5_2 reports a pure equilibrium") {
    auto dir = scratch("verify");
    REQUIRE(run_cli("--mode verify --example ex_5_2 --out " + dir.string(), dir / "log") == 0);
    auto v = nlohmann::json::parse(read_text((dir / "verdict.json").string()));
    CHECK(v["sufficient"] == true);
    CHECK(v["nonexistence"] == false);
    CHECK(v["inconclusive"] == false);
    auto br = parse_csv(read_text((dir / "best_response.csv").string()));
    CHECK(br.header == std::vector<std::string>{"x", "w_p1", "gain_p1", "w_p2", "gain_p2"});
}

TEST_CASE("strategies and simulate artifacts are deterministic") {
    auto dir = scratch("sim");
    const std::string args = "--mode all --example ex_4_2 --paths 500 --dt 1e-3 --seed 7 --out ";
    REQUIRE(run_cli(args + (dir / "a").string(), dir / "log") == 0);
    REQUIRE(run_cli(args + (dir / "b").string(), dir / "log") == 0);
    for (const char* f : {"report.json", "strategy_p1.json", "strategy_p2.json", "strategies.csv", "verdict.json"}) {
        CAPTURE(f);
        CHECK(read_text((dir / "a" / f).string()) == read_text((dir / "b" / f).string()));
    }
    auto p2 = nlohmann::json::parse(read_text((dir / "a" / "strategy_p2.json").string()));
    CHECK(p2.is_object());
    auto rep = nlohmann::json::parse(read_text((dir / "a" / "report.json").string()));
    CHECK(rep.contains("value_at_x0"));
}
