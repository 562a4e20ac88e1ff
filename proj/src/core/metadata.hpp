#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "core/strength.hpp"

namespace d2turb {

inline constexpr const char* kEngineVersion = "0.1.0";
inline constexpr const char* kSplatMethod = "bilinear_weighted_average";
inline constexpr std::uint32_t kFlowFormatVersion = 1;
inline constexpr int kMetaFormatVersion = 1;

// Per-sample record stored as meta.json next to the sample files.
struct MetadataRecord {
  std::string sample_id;
  std::string source_id;
  std::uint64_t seed = 0;
  double d_over_r0 = 0.0;
  StrengthCategory category = StrengthCategory::Weak;
  double path_length_m = 0.0;
  double baseline_offset = 0.0;
  double z_max_m = 0.0;
  double tilt_rms_px = 0.0;
  int kernel_size = 0;
  int psf_grid_y = 0;
  int psf_grid_x = 0;
  bool flat_field_mode = false;
  std::string engine_version = kEngineVersion;
  std::size_t height = 0;
  std::size_t width = 0;
  double psf_max_energy_outside_crop = 0.0;
  std::size_t flow_hole_count = 0;
  // file name -> lowercase hex SHA-256 of the file bytes
  std::map<std::string, std::string> files;
  // SHA-256 over the sorted "name\0digest\n" lines of `files`
  std::string content_digest;

  bool operator==(const MetadataRecord&) const = default;
};

}  // namespace d2turb
