#pragma once

#include <string>
#include <vector>

#include "core/field_synthesis.hpp"

namespace d2turb {

// Least-squares slope of y on x.
double regression_slope(const std::vector<double>& x, const std::vector<double>& y);

// Azimuthally averaged power spectrum of one channel of a square field,
// binned by rounded integer radius (cycles per field); index = radius.
std::vector<double> radial_power_spectrum(const DisplacementField& field, std::size_t channel);

// Log-log slope of the mean radial spectrum (both channels, all fields) over
// radii [r_lo, r_hi].
double spectral_slope(const std::vector<DisplacementField>& fields, std::size_t r_lo, std::size_t r_hi);

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Reduced statistical suite: variance scaling, spectral slope, PSF validity
// and warp round trip.
std::vector<SelftestCheck> run_selftest();

}  // namespace d2turb
