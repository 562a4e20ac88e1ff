#include "core/field_synthesis.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/fft.hpp"
#include "core/zernike.hpp"

namespace d2turb {

namespace {

using Spectrum = std::vector<std::complex<double>>;

double amplitude(double ky, double kx, double k0, double km, double exponent) {
  const double k2 = ky * ky + kx * kx;
  if (k2 == 0.0) return 0.0;
  const double inner = km > 0.0 ? std::exp(-k2 / (2.0 * km * km)) : 1.0;
  return std::pow(k2 + k0 * k0, exponent / 4.0) * inner;
}

void rescale_to_rms(Grid<float>& field, std::size_t channel, const std::vector<double>& values, double target) {
  double sum_sq = 0.0;
  for (double v : values) sum_sq += v * v;
  const double rms = std::sqrt(sum_sq / static_cast<double>(values.size()));
  const double gain = rms > 0.0 ? target / rms : 0.0;
  const std::size_t w = field.width();
  for (std::size_t i = 0; i < values.size(); ++i) {
    field(i / w, i % w, channel) = gain == 0.0 ? 0.0f : static_cast<float>(values[i] * gain);
  }
}

}  // namespace

void TiltSpectrumParams::validate() const {
  if (!(corr_length_px > 0.0) || !std::isfinite(corr_length_px)) {
    throw Error(ErrorCode::Domain, "tilt.corr_length_px must be finite and > 0");
  }
  if (!(tilt_rms_px >= 0.0) || !std::isfinite(tilt_rms_px)) {
    throw Error(ErrorCode::Domain, "tilt.tilt_rms_px must be finite and >= 0");
  }
  if (!std::isfinite(spectral_exponent) || spectral_exponent >= 0.0) {
    throw Error(ErrorCode::Domain, "tilt.spectral_exponent must be finite and negative");
  }
  if (!(inner_scale_px >= 0.0) || !std::isfinite(inner_scale_px)) {
    throw Error(ErrorCode::Domain, "tilt.inner_scale_px must be finite and >= 0");
  }
}

DisplacementField synthesize_raw_field(std::size_t height, std::size_t width, const TiltSpectrumParams& params,
                                       Rng& rng) {
  if (height < 8 || width < 8) {
    throw Error(ErrorCode::Domain,
                "field must be at least 8 x 8, got " + std::to_string(height) + " x " + std::to_string(width));
  }
  params.validate();

  const std::size_t n = height * width;
  const double k0 = 2.0 * std::numbers::pi / params.corr_length_px;
  const double km = params.inner_scale_px > 0.0 ? 5.92 / params.inner_scale_px : 0.0;
  auto ky_of = [&](std::size_t iy) {
    return 2.0 * std::numbers::pi * static_cast<double>(fft::signed_frequency(iy, height)) / static_cast<double>(height);
  };
  auto kx_of = [&](std::size_t ix) {
    return 2.0 * std::numbers::pi * static_cast<double>(fft::signed_frequency(ix, width)) / static_cast<double>(width);
  };

  DisplacementField out = DisplacementField::zeros(height, width);
  std::vector<double> axis_x(n);
  std::vector<double> axis_y(n);

  if (params.mode == TiltFieldMode::Independent) {
    // Circular complex noise: after shaping with a real even amplitude, the
    // real and imaginary parts are independent fields with equal spectra.
    Spectrum spec(n);
    for (auto& v : spec) {
      const double re = rng.normal();
      const double im = rng.normal();
      v = {re, im};
    }
    for (std::size_t iy = 0; iy < height; ++iy) {
      const double ky = ky_of(iy);
      for (std::size_t ix = 0; ix < width; ++ix) {
        spec[iy * width + ix] *= amplitude(ky, kx_of(ix), k0, km, params.spectral_exponent);
      }
    }
    fft::transform_2d(spec, height, width, fft::Direction::Inverse);
    for (std::size_t i = 0; i < n; ++i) {
      axis_x[i] = spec[i].real();
      axis_y[i] = spec[i].imag();
    }
  } else {
    // Real white noise -> Hermitian spectrum -> spectral gradient.
    Spectrum screen(n);
    for (auto& v : screen) v = {rng.normal(), 0.0};
    fft::transform_2d(screen, height, width, fft::Direction::Forward);
    Spectrum gx(n);
    Spectrum gy(n);
    const bool nyq_y = height % 2 == 0;
    const bool nyq_x = width % 2 == 0;
    for (std::size_t iy = 0; iy < height; ++iy) {
      const double ky = (nyq_y && iy == height / 2) ? 0.0 : ky_of(iy);
      for (std::size_t ix = 0; ix < width; ++ix) {
        const double kx = (nyq_x && ix == width / 2) ? 0.0 : kx_of(ix);
        const std::complex<double> shaped = screen[iy * width + ix] * amplitude(ky_of(iy), kx_of(ix), k0, km, params.spectral_exponent);
        gx[iy * width + ix] = std::complex<double>(0.0, kx) * shaped;
        gy[iy * width + ix] = std::complex<double>(0.0, ky) * shaped;
      }
    }
    fft::transform_2d(gx, height, width, fft::Direction::Inverse);
    fft::transform_2d(gy, height, width, fft::Direction::Inverse);
    for (std::size_t i = 0; i < n; ++i) {
      axis_x[i] = gx[i].real();
      axis_y[i] = gy[i].real();
    }
  }

  rescale_to_rms(out.vectors, 0, axis_x, params.tilt_rms_px);
  rescale_to_rms(out.vectors, 1, axis_y, params.tilt_rms_px);
  return out;
}

DisplacementField modulate_displacement(const DisplacementField& raw, const ModulationMap& modulation) {
  if (!raw.vectors.same_extent(modulation.values) || raw.vectors.channels() != 2) {
    throw Error(ErrorCode::Shape, "displacement field and modulation map dimensions differ");
  }
  DisplacementField out = DisplacementField::zeros(raw.height(), raw.width());
  auto src = raw.vectors.values();
  auto dst = out.vectors.values();
  auto m = modulation.values.values();
  for (std::size_t p = 0; p < m.size(); ++p) {
    dst[2 * p] = static_cast<float>(m[p] * static_cast<double>(src[2 * p]));
    dst[2 * p + 1] = static_cast<float>(m[p] * static_cast<double>(src[2 * p + 1]));
  }
  return out;
}

double derived_tilt_rms_px(double d_over_r0, double px_per_tilt_unit) {
  if (!(d_over_r0 >= 0.0)) throw Error(ErrorCode::Domain, "D/r0 must be >= 0");
  const double unit_variance = noll_covariance(3, 1.0)(1, 1);
  return std::sqrt(unit_variance) * std::pow(d_over_r0, 5.0 / 6.0) * px_per_tilt_unit;
}

}  // namespace d2turb
