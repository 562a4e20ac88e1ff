#pragma once

#include <string>

#include <json.hpp>

namespace d2turb {

using Json = nlohmann::json;

// Sorted keys, 2-space indent, trailing newline. Floats use 17 significant
// digits in shortest-form-free notation ("0.10000000000000001") and always
// carry a '.' or exponent. Throws ErrorCode::InvalidInput on non-finite floats.
std::string canonical_json(const Json& value);

// Parses JSON; throws ErrorCode::Format with the parser message.
Json parse_json(const std::string& text, const std::string& origin);

std::string format_double(double value);

}  // namespace d2turb
