#pragma once

#include <filesystem>
#include <string>

#include "core/config.hpp"
#include "core/json_canon.hpp"

namespace d2turb {

// TOML subset: comments, [table] headers, key = value with booleans,
// integers, floats (inf/nan), basic strings and flat arrays. Syntax errors
// throw ErrorCode::Parse with the line number; unknown keys, wrong types and
// invariant violations throw ErrorCode::Config naming the field path.
OpticalConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
OpticalConfig parse_config(const std::filesystem::path& path);

// Fully resolved TOML; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const OpticalConfig& config);

// Resolved config as echoed into the manifest.
Json config_to_json(const OpticalConfig& config);

}  // namespace d2turb
