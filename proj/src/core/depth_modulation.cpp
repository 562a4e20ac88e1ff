#include "core/depth_modulation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/error.hpp"

namespace d2turb {

namespace {

constexpr double kFriedExponent = 3.0 / 5.0;

}  // namespace

PathGeometry PathGeometry::with_path_normaliser(double path_length_m, double baseline_offset) {
  return PathGeometry{path_length_m, baseline_offset, path_length_m};
}

void PathGeometry::validate() const {
  if (!(std::isfinite(path_length_m) && path_length_m > 0.0)) {
    throw Error(ErrorCode::Domain, "geometry.L must be finite and > 0, got " + std::to_string(path_length_m));
  }
  if (!(baseline_offset > 0.0 && baseline_offset < 1.0)) {
    throw Error(ErrorCode::Domain, "geometry.s must lie in (0,1), got " + std::to_string(baseline_offset));
  }
  if (!(std::isfinite(z_max_m) && z_max_m > 0.0 && z_max_m >= path_length_m * baseline_offset)) {
    throw Error(ErrorCode::Domain, "geometry.z_max must be finite and >= L*s, got " + std::to_string(z_max_m));
  }
}

void validate_depth(const DepthMap& depth) {
  const auto& g = depth.values;
  for (std::size_t y = 0; y < g.height(); ++y) {
    for (std::size_t x = 0; x < g.width(); ++x) {
      const double d = g(y, x);
      if (!(d >= 0.0 && d <= 1.0)) {
        throw Error(ErrorCode::InvalidInput, "depth value " + std::to_string(d) + " at (" + std::to_string(y) +
                                                 ", " + std::to_string(x) + ") outside [0,1]");
      }
    }
  }
}

DistanceMap project_depth(const DepthMap& depth, const PathGeometry& geom) {
  geom.validate();
  validate_depth(depth);
  const auto& in = depth.values;
  DistanceMap out{Grid<double>(in.height(), in.width())};
  const double L = geom.path_length_m;
  const double s = geom.baseline_offset;
  auto src = in.values();
  auto dst = out.values.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double d = src[i];
    dst[i] = L * (d + s * (1.0 - d));
  }
  return out;
}

double fried_at_distance(double z_m, double r0_at_path_m, double path_length_m) {
  if (!(z_m > 0.0)) {
    throw Error(ErrorCode::Domain, "distance must be > 0, got " + std::to_string(z_m));
  }
  if (!(path_length_m > 0.0) || z_m > path_length_m) {
    throw Error(ErrorCode::Domain, "distance must lie in (0, L]");
  }
  if (!(r0_at_path_m > 0.0)) {
    throw Error(ErrorCode::Domain, "r0(L) must be > 0");
  }
  return r0_at_path_m * std::pow(path_length_m / z_m, kFriedExponent);
}

ModulationMap modulation_map(const DistanceMap& distance, double z_max_m) {
  if (!(z_max_m > 0.0) || !std::isfinite(z_max_m)) {
    throw Error(ErrorCode::Domain, "z_max must be finite and > 0");
  }
  const auto& in = distance.values;
  ModulationMap out{Grid<double>(in.height(), in.width())};
  auto src = in.values();
  auto dst = out.values.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double z = src[i];
    if (!(z >= 0.0)) {
      throw Error(ErrorCode::InvalidInput, "distance " + std::to_string(z) + " is negative or non-finite");
    }
    if (z > z_max_m) {
      throw Error(ErrorCode::Normalization,
                  "distance " + std::to_string(z) + " m exceeds z_max " + std::to_string(z_max_m) + " m");
    }
    dst[i] = std::pow(z / z_max_m, kFriedExponent);
  }
  return out;
}

ModulationMap flat_modulation(std::size_t height, std::size_t width) {
  return ModulationMap{Grid<double>(height, width, 1, 1.0)};
}

double max_distance(const DistanceMap& distance) {
  auto v = distance.values.values();
  if (v.empty()) throw Error(ErrorCode::Domain, "empty distance map");
  return *std::max_element(v.begin(), v.end());
}

}  // namespace d2turb
