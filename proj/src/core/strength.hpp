#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "core/config.hpp"

namespace d2turb {

enum class StrengthCategory { Weak, Medium, Strong };

inline constexpr double kWeakUpper = 2.25;    // weak: D/r0 < 2.25
inline constexpr double kStrongLower = 3.75;  // strong: D/r0 > 3.75

// Both endpoints of [2.25, 3.75] are medium. Throws ErrorCode::Domain for
// negative or non-finite input.
StrengthCategory categorize_strength(double d_over_r0);

const char* category_name(StrengthCategory category);
std::optional<StrengthCategory> parse_category(std::string_view name);

struct SampleParams {
  double d_over_r0 = 0.0;
  std::uint64_t seed = 0;
};

// Deterministic in (config, sample_index) alone. Uniform mode draws D/r0 on
// [lo, hi]; stratified mode cycles weak/medium/strong by index over the parts
// of each category that intersect [lo, hi].
SampleParams sample_params(const OpticalConfig& config, std::uint64_t sample_index);

}  // namespace d2turb
