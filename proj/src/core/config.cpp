#include "core/config.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"

namespace d2turb {

namespace {

[[noreturn]] void reject(const std::string& field, const std::string& constraint) {
  throw Error(ErrorCode::Config, field + ": " + constraint);
}

void require_finite(const std::string& field, double v) {
  if (!std::isfinite(v)) reject(field, "must be finite");
}

}  // namespace

void OpticalConfig::validate() const {
  require_finite("geometry.L", geometry.path_length_m);
  if (!(geometry.path_length_m > 0.0)) reject("geometry.L", "must be > 0");
  require_finite("geometry.s", geometry.baseline_offset);
  if (!(geometry.baseline_offset > 0.0 && geometry.baseline_offset < 1.0)) {
    reject("geometry.s", "must lie in the open interval (0,1)");
  }
  if (geometry.z_max_mode == ZmaxMode::Fixed) {
    require_finite("geometry.z_max", geometry.z_max_m);
    if (!(geometry.z_max_m >= geometry.path_length_m)) reject("geometry.z_max", "must be >= geometry.L");
  }

  require_finite("strength.d_over_r0", strength.d_over_r0_min);
  require_finite("strength.d_over_r0", strength.d_over_r0_max);
  if (!(strength.d_over_r0_min >= 0.0 && strength.d_over_r0_min <= strength.d_over_r0_max)) {
    reject("strength.d_over_r0", "requires 0 <= lo <= hi");
  }

  if (zernike.modes < 3) reject("zernike.modes", "must be >= 3");
  if (zernike.modes > 1000) reject("zernike.modes", "must be <= 1000");
  if (zernike.pupil_resolution < 32) reject("zernike.pupil_resolution", "must be >= 32");
  if (zernike.pupil_resolution > 2048) reject("zernike.pupil_resolution", "must be <= 2048");
  if (zernike.kernel_size < 1 || zernike.kernel_size % 2 == 0) reject("zernike.kernel_size", "must be odd and >= 1");
  if (zernike.kernel_size > zernike.pupil_resolution / 2) {
    reject("zernike.kernel_size", "must be <= zernike.pupil_resolution / 2");
  }
  if (zernike.grid_y < 2 || zernike.grid_x < 2) reject("zernike.grid", "each dimension must be >= 2");
  if (zernike.grid_y > 64 || zernike.grid_x > 64) reject("zernike.grid", "each dimension must be <= 64");
  if (std::isnan(zernike.correlation_length) || zernike.correlation_length < 0.0) {
    reject("zernike.correlation_length", "must be >= 0 (inf allowed)");
  }

  if (tilt.tilt_rms_px) {
    require_finite("tilt.tilt_rms_px", *tilt.tilt_rms_px);
    if (*tilt.tilt_rms_px < 0.0) reject("tilt.tilt_rms_px", "must be >= 0");
  }
  require_finite("tilt.px_per_tilt_unit", tilt.px_per_tilt_unit);
  if (tilt.px_per_tilt_unit < 0.0) reject("tilt.px_per_tilt_unit", "must be >= 0");
  require_finite("tilt.corr_length_px", tilt.corr_length_px);
  if (!(tilt.corr_length_px > 0.0)) reject("tilt.corr_length_px", "must be > 0");
  require_finite("tilt.inner_scale_px", tilt.inner_scale_px);
  if (!(tilt.inner_scale_px >= 0.0)) reject("tilt.inner_scale_px", "must be >= 0");
  require_finite("tilt.spectral_exponent", tilt.spectral_exponent);
  if (!(tilt.spectral_exponent < 0.0)) reject("tilt.spectral_exponent", "must be < 0");

  if (output.depth_suffix.find('/') != std::string::npos) reject("output.depth_suffix", "must not contain '/'");
  if (sample_count == 0) reject("sample_count", "must be >= 1");
}

PathGeometry OpticalConfig::path_geometry(const DistanceMap* distance) const {
  PathGeometry g = PathGeometry::with_path_normaliser(geometry.path_length_m, geometry.baseline_offset);
  switch (geometry.z_max_mode) {
    case ZmaxMode::Path:
      break;
    case ZmaxMode::Fixed:
      g.z_max_m = geometry.z_max_m;
      break;
    case ZmaxMode::Scene:
      if (distance == nullptr) throw Error(ErrorCode::Internal, "per-image z_max requires a distance map");
      g.z_max_m = max_distance(*distance);
      break;
  }
  return g;
}

PsfGridSpec OpticalConfig::psf_grid_spec() const {
  return PsfGridSpec{zernike.grid_y, zernike.grid_x, zernike.correlation_length};
}

TiltSpectrumParams OpticalConfig::tilt_params(double d_over_r0) const {
  TiltSpectrumParams p;
  p.corr_length_px = tilt.corr_length_px;
  p.inner_scale_px = tilt.inner_scale_px;
  p.spectral_exponent = tilt.spectral_exponent;
  p.mode = tilt.mode;
  p.tilt_rms_px = tilt.tilt_rms_px ? *tilt.tilt_rms_px : derived_tilt_rms_px(d_over_r0, tilt.px_per_tilt_unit);
  return p;
}

const char* z_max_mode_name(ZmaxMode mode) {
  switch (mode) {
    case ZmaxMode::Path: return "path";
    case ZmaxMode::Scene: return "scene";
    case ZmaxMode::Fixed: return "fixed";
  }
  return "?";
}

const char* strength_sampling_name(StrengthSampling sampling) {
  return sampling == StrengthSampling::Uniform ? "uniform" : "stratified";
}

const char* tilt_mode_name(TiltFieldMode mode) {
  return mode == TiltFieldMode::Independent ? "independent" : "phase_gradient";
}

}  // namespace d2turb
