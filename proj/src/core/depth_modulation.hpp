#pragma once

#include <cstddef>

#include "core/grid.hpp"

namespace d2turb {

// Relative depth in [0,1], 1 = farthest.
struct DepthMap {
  Grid<double> values;
};

// Physical distance z(x) in meters.
struct DistanceMap {
  Grid<double> values;
};

// Turbulence strength M(x) in [0,1].
struct ModulationMap {
  Grid<double> values;
};

struct PathGeometry {
  double path_length_m = 1000.0;   // L
  double baseline_offset = 0.5;    // s, open interval (0,1)
  double z_max_m = 1000.0;         // normaliser, >= L*s

  // Geometry with z_max = L.
  static PathGeometry with_path_normaliser(double path_length_m, double baseline_offset);

  // Throws ErrorCode::Domain naming the violated constraint.
  void validate() const;
};

// Throws ErrorCode::InvalidInput on any value outside [0,1] or non-finite.
void validate_depth(const DepthMap& depth);

// z(x) = L * ((1 - s) * d(x) + s), evaluated as L * (d + s * (1 - d)) so the
// far plane maps to exactly L and the near plane to exactly L*s.
DistanceMap project_depth(const DepthMap& depth, const PathGeometry& geom);

// r0(z) = r0(L) * (L / z)^(3/5).
double fried_at_distance(double z_m, double r0_at_path_m, double path_length_m);

// M(x) = (z(x) / z_max)^(3/5). Throws ErrorCode::Normalization if any
// distance exceeds z_max.
ModulationMap modulation_map(const DistanceMap& distance, double z_max_m);

// M == 1 everywhere (the flat-field regime).
ModulationMap flat_modulation(std::size_t height, std::size_t width);

// Largest distance in the map; the per-image z_max option.
double max_distance(const DistanceMap& distance);

}  // namespace d2turb
