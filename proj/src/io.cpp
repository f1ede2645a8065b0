#include "dynkin/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dynkin/errors.hpp"

namespace dynkin {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void append_row(std::string& out, const std::vector<double>& values) {
    for (size_t k = 0; k < values.size(); ++k) {
        if (k) out += ',';
        out += format_double(values[k]);
    }
    out += '\n';
}

}  // namespace

std::string value_csv(const SolvedProblem& problem) {
    const auto& sol = problem.sol;
    const auto& pay = problem.config.payoffs;
    std::string out = "x,f,g,h,f_tilde,g_tilde,v,in_d1,in_d2,residual\n";
    for (size_t i = 0; i < sol.grid.size(); ++i) {
        double x = sol.grid[i];
        append_row(out, {x, pay.f(x), pay.g(x), pay.h(x), sol.f_tilde[i], sol.g_tilde[i], sol.v[i],
                         sol.d1_mask()[i] ? 1.0 : 0.0, sol.d2_mask()[i] ? 1.0 : 0.0, sol.residual[i]});
    }
    return out;
}

std::vector<double> CsvTable::column(const std::string& name) const {
    for (size_t k = 0; k < header.size(); ++k) {
        if (header[k] != name) continue;
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[k]);
        return out;
    }
    throw ValidationError("CSV has no column '" + name + "'");
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw ValidationError("CSV line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(t.header.size()) + " fields, got " + std::to_string(fields.size()));
        std::vector<double> row;
        for (size_t k = 0; k < fields.size(); ++k) {
            const char* s = fields[k].c_str();
            char* end = nullptr;
            double v = std::strtod(s, &end);
            if (end == s || *end != '\0')
                throw ValidationError("CSV line " + std::to_string(lineno) + ", column '" + t.header[k] +
                                      "': not a number");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw ValidationError("CSV is empty");
    return t;
}

nlohmann::json boundaries_json(const ValueSolution& sol) {
    return {{"d1_boundaries", sol.stops.d1_boundaries}, {"d2_boundaries", sol.stops.d2_boundaries}};
}

std::string strategy_csv(const std::pair<RandomizedStrategy, RandomizedStrategy>& strategies,
                         const std::vector<double>& grid) {
    std::string out = "x,rate_p1,rate_p2,stop_p1,stop_p2\n";
    for (double x : grid)
        append_row(out, {x, strategies.first.rate(x), strategies.second.rate(x),
                         strategies.first.stop_set.contains(x) ? 1.0 : 0.0,
                         strategies.second.stop_set.contains(x) ? 1.0 : 0.0});
    return out;
}

std::string best_response_csv(const BestResponseSolution& p1, const BestResponseSolution& p2) {
    if (p1.grid.size() != p2.grid.size()) throw ValidationError("best responses live on different grids");
    std::string out = "x,w_p1,gain_p1,w_p2,gain_p2\n";
    for (size_t i = 0; i < p1.grid.size(); ++i)
        append_row(out, {p1.grid[i], p1.w[i], p1.gain.empty() ? 0.0 : p1.gain[i], p2.w[i],
                         p2.gain.empty() ? 0.0 : p2.gain[i]});
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw ValidationError("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << text;
    if (!out) throw ValidationError("write failed for '" + path + "'");
}

void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace dynkin
