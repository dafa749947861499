#pragma once

// JSON scenario files. Matrices are row-major nested arrays. The path
// "builtin:paper" names the built-in seven-agent experiment.

#include <string>

#include <json.hpp>

#include "occ/scenario.hpp"

namespace occ {

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

/// Parses text; syntax errors report the line and column.
Scenario parse_scenario(const std::string& text);
std::string serialize_scenario(const Scenario& s);

Scenario load_scenario(const std::string& path);

nlohmann::json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace occ
