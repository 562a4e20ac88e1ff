#pragma once

#include <cstddef>
#include <cstdint>

#include "core/field_synthesis.hpp"
#include "core/grid.hpp"

namespace d2turb {

// Splat coverage below this accumulated weight marks a hole.
inline constexpr double kCoverageThreshold = 1e-4;

// Backward flow in pixels, same axis convention as DisplacementField.
// `valid` records splat coverage before hole filling (1 = covered).
struct BackwardFlow {
  Grid<float> vectors;
  Grid<std::uint8_t> valid;

  std::size_t height() const noexcept { return vectors.height(); }
  std::size_t width() const noexcept { return vectors.width(); }
  std::size_t valid_count() const;
};

struct SplatDiagnostics {
  double deposited_weight = 0.0;  // landed inside the image
  double dropped_weight = 0.0;    // fell outside the image
  std::size_t hole_count = 0;
};

// Splats -delta(x) to x + delta(x) with bilinear weights and normalises by
// the accumulated weight. Pixels below kCoverageThreshold are left at zero
// and flagged invalid. Rows are accumulated in fixed 32-row chunks merged in
// chunk order, so the result is identical for any worker count.
BackwardFlow splat_backward(const DisplacementField& delta, unsigned workers = 1, SplatDiagnostics* diagnostics = nullptr);

// Fills invalid pixels: an onion-peel pass seeds every hole from the mean of
// its filled 8-neighbours, then up to 64 Jacobi sweeps relax hole pixels
// towards the mean of their 4-neighbours. Valid pixels are not modified.
// Throws ErrorCode::Unfillable when no pixel is valid.
BackwardFlow fill_holes(BackwardFlow flow);

// splat_backward followed by fill_holes. Throws ErrorCode::InvalidInput on a
// non-finite displacement.
BackwardFlow forward_splat_invert(const DisplacementField& delta, unsigned workers = 1,
                                  SplatDiagnostics* diagnostics = nullptr);

}  // namespace d2turb
