#pragma once

#include <cstddef>

#include "core/depth_modulation.hpp"
#include "core/grid.hpp"
#include "core/rng.hpp"

namespace d2turb {

enum class TiltFieldMode {
  // Two independent fields with the Kolmogorov slope (default).
  Independent,
  // Gradient of one scalar Kolmogorov phase screen.
  PhaseGradient,
};

struct TiltSpectrumParams {
  double corr_length_px = 128.0;          // outer-scale roll-off, pixels
  double tilt_rms_px = 1.0;               // per-axis RMS at M = 1
  double spectral_exponent = -11.0 / 3.0;  // power spectrum slope
  double inner_scale_px = 12.0;            // inner-scale roll-off, pixels; 0 disables
  TiltFieldMode mode = TiltFieldMode::Independent;

  void validate() const;
};

// Per-pixel displacement in pixels; channel 0 = +x (right), 1 = +y (down).
struct DisplacementField {
  Grid<float> vectors;

  std::size_t height() const noexcept { return vectors.height(); }
  std::size_t width() const noexcept { return vectors.width(); }
  static DisplacementField zeros(std::size_t height, std::size_t width) {
    return DisplacementField{Grid<float>(height, width, 2, 0.0f)};
  }
};

// Shapes white Gaussian spectral noise with the modified von Karman amplitude
// (|k|^2 + k0^2)^(exponent/4) * exp(-|k|^2 / (2 km^2)), k0 = 2 pi / corr_length_px,
// km = 5.92 / inner_scale_px (no inner roll-off when it is 0), zero at DC, and
// rescales each axis to an empirical RMS of exactly tilt_rms_px.
// Throws ErrorCode::Domain if height or width is below 8.
DisplacementField synthesize_raw_field(std::size_t height, std::size_t width, const TiltSpectrumParams& params,
                                       Rng& rng);

// delta(x) = M(x) * raw(x) on both channels.
DisplacementField modulate_displacement(const DisplacementField& raw, const ModulationMap& modulation);

// RMS tilt in pixels derived from the Zernike tilt variance:
// sqrt(Var(a2) at D/r0 = 1) * (D/r0)^(5/6) * px_per_tilt_unit.
double derived_tilt_rms_px(double d_over_r0, double px_per_tilt_unit);

}  // namespace d2turb
