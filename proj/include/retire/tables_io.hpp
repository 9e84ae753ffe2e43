// Serialization of grids and decision tables.
#pragma once

#include <string>

#include <json.hpp>

#include "retire/grid.hpp"
#include "retire/solver.hpp"

namespace retire {

nlohmann::json to_json(const GridSpec& g);
GridSpec grid_from_json(const nlohmann::json& j);

// Binary container: magic, version, layout header, then the arrays per age.
void save_tables(const std::string& path, const DecisionTables& t);
DecisionTables load_tables(const std::string& path);

}  // namespace retire
