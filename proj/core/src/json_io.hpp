#pragma once

#include <json.hpp>

#include "cfgtune/config_space.hpp"

namespace cfgtune::detail {

using ordered_json = nlohmann::ordered_json;

ordered_json value_to_json(const Value& value);
Value value_from_json(const nlohmann::ordered_json& node, const Dimension& dim);

ordered_json space_to_json(const ConfigurationSpace& space);
ordered_json config_to_json(const Configuration& config);
Configuration config_from_json(const ordered_json& node, const ConfigurationSpace& space);

// Doubles holding integers are written as JSON integers.
ordered_json number_to_json(double x);

}  // namespace cfgtune::detail
