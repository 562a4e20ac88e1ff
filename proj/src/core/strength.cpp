#include "core/strength.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace d2turb {

StrengthCategory categorize_strength(double d_over_r0) {
  if (!std::isfinite(d_over_r0) || d_over_r0 < 0.0) {
    throw Error(ErrorCode::Domain, "D/r0 must be finite and >= 0");
  }
  if (d_over_r0 < kWeakUpper) return StrengthCategory::Weak;
  if (d_over_r0 > kStrongLower) return StrengthCategory::Strong;
  return StrengthCategory::Medium;
}

const char* category_name(StrengthCategory category) {
  switch (category) {
    case StrengthCategory::Weak: return "weak";
    case StrengthCategory::Medium: return "medium";
    case StrengthCategory::Strong: return "strong";
  }
  return "?";
}

std::optional<StrengthCategory> parse_category(std::string_view name) {
  if (name == "weak") return StrengthCategory::Weak;
  if (name == "medium") return StrengthCategory::Medium;
  if (name == "strong") return StrengthCategory::Strong;
  return std::nullopt;
}

SampleParams sample_params(const OpticalConfig& config, std::uint64_t sample_index) {
  SampleParams out;
  out.seed = mix_seed(config.global_seed, sample_index);
  // Strength draws use their own stream so they never shift the optics stream.
  Rng rng(splitmix64(out.seed ^ 0x5354524E47544853ULL));
  double lo = config.strength.d_over_r0_min;
  double hi = config.strength.d_over_r0_max;

  if (config.strength.sampling == StrengthSampling::Stratified) {
    struct Band {
      StrengthCategory category;
      double lo;
      double hi;
    };
    const double inf = std::numeric_limits<double>::infinity();
    const Band bands[3] = {{StrengthCategory::Weak, 0.0, kWeakUpper},
                           {StrengthCategory::Medium, kWeakUpper, kStrongLower},
                           {StrengthCategory::Strong, kStrongLower, inf}};
    std::vector<Band> usable;
    for (const Band& band : bands) {
      const double a = std::max(lo, band.lo);
      const double b = std::min(hi, band.hi);
      if (a > b) continue;
      if (a < b || categorize_strength(a) == band.category) usable.push_back({band.category, a, b});
    }
    if (!usable.empty()) {
      const Band& band = usable[sample_index % usable.size()];
      double v = band.lo + (band.hi - band.lo) * rng.uniform();
      // Band edges at 2.25 / 3.75 belong to medium; nudge draws that land there.
      if (categorize_strength(v) != band.category) {
        v = categorize_strength(band.lo) == band.category ? band.lo : band.hi;
        if (categorize_strength(v) != band.category) v = std::nextafter(band.lo, band.hi);
      }
      out.d_over_r0 = v;
      return out;
    }
  }
  if (lo == hi) {
    out.d_over_r0 = lo;
    return out;
  }
  out.d_over_r0 = std::min(lo + (hi - lo) * rng.uniform(), hi);
  return out;
}

}  // namespace d2turb
