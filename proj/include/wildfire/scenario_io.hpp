#pragma once

#include <iosfwd>
#include <string>

#include "wildfire/model.hpp"

namespace wildfire {

// Scenario files are JSON; see data/scenarios/README.md for the schema.
// Distances are always recomputed from positions.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
std::string dump_scenario(const Scenario& scenario);

// Fuel mask drawn cell by cell with the given density, then the listed fires.
FireMap make_initial_map(int width, int height, double fuel_density, std::uint64_t fuel_seed,
                         const std::vector<FirePoint>& fires);

}  // namespace wildfire
