#pragma once

// JSON conversion for matrices, realizations, plants, graphs and delay
// patterns. Doubles are written with round-trip precision.

#include <string>

#include <json.hpp>

#include "dhinf/delay_structure.hpp"
#include "dhinf/synthesis.hpp"

namespace dhinf::io {

using json = nlohmann::json;

/// Row-major nested arrays. An empty matrix is written as [] and needs
/// explicit shape information to read back.
json to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const json& j, const std::string& field);
MatrixXd matrix_from_json(const json& j, const std::string& field, Index rows, Index cols);

/// {"states", "inputs", "outputs", "A", "B", "C", "D"}.
json to_json(const RealizationSS& g);
RealizationSS realization_from_json(const json& j, const std::string& field);

/// Partitioned form {"A", "B1", "B2", "C1", "C2", "D11", "D12", "D21", "D22"}.
json to_json(const Plant& p);
/// Accepts the partitioned form, {"A","B","C","D","u_dim","y_dim"} with the
/// last u_dim inputs and y_dim outputs being u and y, or four blocks
/// {"P11","P12","P21","P22"} given as independent realizations.
Plant plant_from_json(const json& j, const std::string& field);

json to_json(const CommGraph& g);
CommGraph graph_from_json(const json& j, const std::string& field);

json to_json(const DelayPattern& d);
DelayPattern pattern_from_json(const json& j, const std::string& field);

json to_json(const StructuredFir& v);

}  // namespace dhinf::io
