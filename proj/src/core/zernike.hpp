#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "core/rng.hpp"

namespace d2turb {

// Radial order n and signed azimuthal frequency m (m > 0: cos, m < 0: sin).
struct ZernikeIndex {
  int n = 0;
  int m = 0;
  bool operator==(const ZernikeIndex&) const = default;
};

// Noll's single-index ordering; j >= 1. Throws ErrorCode::Domain for j < 1.
ZernikeIndex noll_to_nm(int j);

// Noll-normalised Zernike mode j at unit-disk point (x, y): (1/pi) * integral
// of Z_j^2 over the disk equals 1. Returns 0 outside the disk.
double zernike_value(int j, double x, double y);

// Modes 1..J evaluated on a P x P pixel-centred grid covering [-1,1]^2.
// Only pixels inside the unit disk are stored.
class ZernikeBasis {
 public:
  static ZernikeBasis build(int mode_count, int pupil_resolution);

  int mode_count() const noexcept { return mode_count_; }
  int pupil_resolution() const noexcept { return resolution_; }

  // Row-major grid indices (y * P + x) of the pupil pixels.
  std::span<const std::uint32_t> pupil_indices() const noexcept { return pupil_indices_; }
  std::size_t pupil_pixel_count() const noexcept { return pupil_indices_.size(); }

  // Values of mode j (1-based) at each pupil pixel, ordered as pupil_indices().
  std::span<const double> mode(int j) const;

  // Area of one pixel in unit-disk coordinates, (2/P)^2.
  double pixel_area() const noexcept;

  // Sum of coefficients[j-1] * Z_j over the pupil pixels. Noll modes 2 and 3
  // are skipped when exclude_tilt is set.
  std::vector<double> phase(std::span<const double> coefficients, bool exclude_tilt) const;

 private:
  int mode_count_ = 0;
  int resolution_ = 0;
  std::vector<std::uint32_t> pupil_indices_;
  std::vector<double> table_;  // mode-major: J x pupil_pixel_count
};

// Normalising constant of the Kolmogorov Zernike covariance, consistent with
// the phase structure function 6.88 (r/r0)^(5/3).
double kolmogorov_zernike_constant();

// J x J covariance of Noll-normalised Zernike coefficients (radians^2) under
// Kolmogorov statistics for a given D/r0. Piston row and column are zero.
Eigen::MatrixXd noll_covariance(int mode_count, double d_over_r0);

struct AberrationSample {
  std::vector<double> coefficients;  // radians, index j-1 holds Noll mode j
  double d_over_r0 = 0.0;
};

// Zero-mean Gaussian sampler with a fixed covariance, via the symmetric
// square root V * sqrt(L) * V^T of the covariance.
class CoefficientSampler {
 public:
  explicit CoefficientSampler(const Eigen::MatrixXd& covariance);

  int mode_count() const noexcept { return static_cast<int>(factor_.rows()); }
  const Eigen::MatrixXd& factor() const noexcept { return factor_; }

  // Consumes exactly mode_count() normal variates.
  Eigen::VectorXd draw(Rng& rng) const;

 private:
  Eigen::MatrixXd factor_;
};

AberrationSample sample_coefficients(const Eigen::MatrixXd& covariance, Rng& rng, double d_over_r0 = 0.0);

// Normalised blur kernel with odd side length.
struct Psf {
  int size = 0;
  std::vector<double> weights;  // row-major size x size
  // Signed kernel mass outside the crop window (fraction of the total),
  // before clipping and renormalisation. Oscillating ringing largely cancels.
  double energy_outside_crop = 0.0;

  double at(int y, int x) const { return weights[static_cast<std::size_t>(y) * size + x]; }
  bool crop_warning() const noexcept { return energy_outside_crop > 0.05; }
};

// Turns aberration coefficients into image-plane blur kernels.
//
// The clean image is taken to be the diffraction-limited image of the same
// aperture, sampled at one pixel per lambda/D. The kernel applied to it is the
// atmospheric transfer relative to the unaberrated aperture: its spectrum is
// OTF(phase) / OTF(0), where each OTF is the pupil autocorrelation (the
// Fourier transform of |FT(pupil * exp(i phase))|^2). At one pixel per
// lambda/D the image band lies strictly inside the aperture passband, so the
// ratio is well conditioned, and zero phase gives the identity kernel.
//
// Tip/tilt (Noll 2, 3) is removed before synthesis. The kernel is recentred
// on its centroid by whole pixels, negative lobes are clipped, and the
// result is cropped to kernel_size and renormalised to unit sum.
class PsfSynthesizer {
 public:
  PsfSynthesizer(const ZernikeBasis& basis, int kernel_size);

  const ZernikeBasis& basis() const noexcept { return *basis_; }
  int kernel_size() const noexcept { return kernel_size_; }
  // Period (pixels) of the band-limited kernel before cropping.
  int kernel_period() const noexcept { return period_; }

  Psf synthesize(std::span<const double> coefficients) const;

 private:
  std::vector<std::complex<double>> transfer(std::span<const double> phase) const;

  const ZernikeBasis* basis_;
  int kernel_size_;
  int period_;      // M
  int lag_stride_;  // pupil samples per kernel frequency bin
  int fft_size_;    // N, zero-padded autocorrelation size
  std::vector<std::complex<double>> diffraction_otf_;  // M x M
};

Psf synthesize_psf(const AberrationSample& sample, const ZernikeBasis& basis, int kernel_size);

struct PsfGridSpec {
  int grid_y = 8;
  int grid_x = 8;
  // Gaussian correlation length between anchors, in anchor units.
  // 0 gives independent anchors, +inf identical anchors.
  double correlation_length = 1.0;
};

// Coarse grid of kernels; anchors sit on a regular lattice whose outer
// anchors lie on the image corners, so every pixel has four enclosing anchors.
struct PsfGrid {
  int grid_y = 0;
  int grid_x = 0;
  std::vector<double> anchor_y;  // pixel row of each anchor row
  std::vector<double> anchor_x;  // pixel column of each anchor column
  std::vector<Psf> kernels;      // row-major grid_y x grid_x
  std::vector<Eigen::VectorXd> coefficients;

  const Psf& at(int gy, int gx) const { return kernels[static_cast<std::size_t>(gy) * grid_x + gx]; }
  double max_energy_outside_crop() const;
  bool crop_warning() const;
};

// Spatially correlated coefficient vectors, one per anchor (row-major).
// Independent draws are smoothed over the anchor lattice with a Gaussian of
// the given correlation length and rescaled so each anchor keeps the exact
// marginal covariance of `sampler`.
std::vector<Eigen::VectorXd> correlated_anchor_coefficients(const CoefficientSampler& sampler, const PsfGridSpec& spec,
                                                            Rng& rng);

PsfGrid build_psf_grid(const PsfGridSpec& spec, double d_over_r0, std::size_t height, std::size_t width,
                       const PsfSynthesizer& synthesizer, Rng& rng);

}  // namespace d2turb
