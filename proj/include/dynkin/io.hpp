#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dynkin/pipeline.hpp"
#include "dynkin/strategy.hpp"
#include "dynkin/verifier.hpp"

namespace dynkin {

// 17 significant digits: parsing the text gives back the same double.
std::string format_double(double v);

// Columns x, f, g, h, f_tilde, g_tilde, v, in_d1, in_d2, residual.
std::string value_csv(const SolvedProblem& problem);

// Numeric table with a header row, as written by the CSV emitters.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    // Throws ValidationError if the column is missing.
    std::vector<double> column(const std::string& name) const;
};

// Throws ValidationError on a ragged row or a non-numeric field.
CsvTable parse_csv(const std::string& text);

// {d1_boundaries: [...], d2_boundaries: [...]}.
nlohmann::json boundaries_json(const ValueSolution& sol);

// Plot data: x, rate_p1, rate_p2, stop_p1, stop_p2 on the solver grid.
std::string strategy_csv(const std::pair<RandomizedStrategy, RandomizedStrategy>& strategies,
                         const std::vector<double>& grid);

// Plot data: x, w_p1, gain_p1, w_p2, gain_p2.
std::string best_response_csv(const BestResponseSolution& p1, const BestResponseSolution& p2);

std::string read_text(const std::string& path);
// Creates parent directories as needed.
void write_text(const std::string& path, const std::string& text);
void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace dynkin
