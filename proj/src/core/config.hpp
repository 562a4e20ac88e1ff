#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "core/depth_modulation.hpp"
#include "core/field_synthesis.hpp"
#include "core/zernike.hpp"

namespace d2turb {

inline constexpr std::uint64_t kDefaultGlobalSeed = 1;
inline constexpr std::size_t kDefaultSampleCount = 64;

enum class ZmaxMode {
  Path,   // z_max = L
  Scene,  // z_max = largest distance in each image
  Fixed,  // z_max = configured value
};

enum class StrengthSampling { Uniform, Stratified };

struct GeometryConfig {
  double path_length_m = 1000.0;
  double baseline_offset = 0.5;
  ZmaxMode z_max_mode = ZmaxMode::Path;
  double z_max_m = 0.0;  // used when z_max_mode == Fixed
  bool operator==(const GeometryConfig&) const = default;
};

struct StrengthConfig {
  double d_over_r0_min = 1.0;
  double d_over_r0_max = 5.5;
  StrengthSampling sampling = StrengthSampling::Uniform;
  bool operator==(const StrengthConfig&) const = default;
};

struct ZernikeConfig {
  int modes = 36;
  int pupil_resolution = 256;
  int kernel_size = 33;
  int grid_y = 8;
  int grid_x = 8;
  double correlation_length = 1.0;
  bool operator==(const ZernikeConfig&) const = default;
};

struct TiltConfig {
  std::optional<double> tilt_rms_px;  // unset: derived from D/r0
  double px_per_tilt_unit = 1.0;
  double corr_length_px = 128.0;  // outer scale
  double inner_scale_px = 12.0;   // keeps the field smooth at pixel scale
  double spectral_exponent = -11.0 / 3.0;
  TiltFieldMode mode = TiltFieldMode::Independent;
  bool operator==(const TiltConfig&) const = default;
};

struct OutputConfig {
  bool persist_blur = false;
  bool debug = false;  // also writes flow_fwd.d2fl, modulation.png, blur.png
  std::string depth_suffix = "_depth";
  bool operator==(const OutputConfig&) const = default;
};

struct OpticalConfig {
  GeometryConfig geometry;
  StrengthConfig strength;
  ZernikeConfig zernike;
  TiltConfig tilt;
  OutputConfig output;
  bool flat_field_mode = false;
  std::uint64_t global_seed = kDefaultGlobalSeed;
  std::size_t sample_count = kDefaultSampleCount;

  bool operator==(const OpticalConfig&) const = default;

  // Throws ErrorCode::Config naming the offending field path.
  void validate() const;

  // Geometry with z_max resolved; `distance` is needed for ZmaxMode::Scene.
  PathGeometry path_geometry(const DistanceMap* distance = nullptr) const;
  PsfGridSpec psf_grid_spec() const;
  TiltSpectrumParams tilt_params(double d_over_r0) const;
};

const char* z_max_mode_name(ZmaxMode mode);
const char* strength_sampling_name(StrengthSampling sampling);
const char* tilt_mode_name(TiltFieldMode mode);

}  // namespace d2turb
