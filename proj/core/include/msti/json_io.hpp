#pragma once

#include <nlohmann/json.hpp>

#include "msti/core.hpp"
#include "msti/parser.hpp"

namespace msti {

// BBox <-> [xmin, ymin, xmax, ymax]
void to_json(nlohmann::json& j, const BBox& b);
void from_json(const nlohmann::json& j, BBox& b);

// Sample <-> the dataset record object. "label" accepts 0/1 or the
// string names; optional fields are omitted when absent.
void to_json(nlohmann::json& j, const Sample& s);
void from_json(const nlohmann::json& j, Sample& s);

// Missing fields keep their defaults.
void to_json(nlohmann::json& j, const RewardConfig& c);
void from_json(const nlohmann::json& j, RewardConfig& c);

void to_json(nlohmann::json& j, const RewardVector& v);

void to_json(nlohmann::json& j, const ParsedResponse& r);

}  // namespace msti
