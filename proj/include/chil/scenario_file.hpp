#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "chil/domain.hpp"

namespace chil {

// Scenario documents are `key = value` lines; `#` starts a comment.
// Nested fields use dotted keys (battery.capacity_wh). Missing keys keep
// their defaults; unknown keys and unparsable values are InputErrors that
// carry the line number.
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Canonical dump: every key, fixed order, shortest round-trip numbers.
std::string scenario_to_text(const ScenarioConfig& cfg);

/// SHA-256 of the canonical dump.
std::string config_hash(const ScenarioConfig& cfg);

}  // namespace chil
