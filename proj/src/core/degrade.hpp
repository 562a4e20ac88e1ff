#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "core/config.hpp"
#include "core/depth_modulation.hpp"
#include "core/field_synthesis.hpp"
#include "core/flow_inverse.hpp"
#include "core/grid.hpp"
#include "core/metadata.hpp"
#include "core/zernike.hpp"

namespace d2turb {

struct CleanScene {
  Image image;  // H x W x 3, values in [0,1]
  DepthMap depth;
  std::string identifier;

  // Throws ErrorCode::Shape on dimension mismatch, InvalidInput on bad values.
  void validate() const;
};

// I_blur(x) = M(x) * (K(x) * I)(x) + (1 - M(x)) * I(x). K(x) * I is the
// bilinear blend of the convolutions with the four enclosing anchor kernels.
// Borders use reflect-101 padding. Throws ErrorCode::Domain if a kernel is
// larger than the image.
Image spatially_varying_blur(const Image& image, const PsfGrid& psfs, const ModulationMap& modulation);

// out(x) = img(x + delta(x)), bilinear, sample coordinates clamped to the
// border. Works for any channel count. Throws ErrorCode::InvalidInput on a
// non-finite displacement.
Image backward_warp(const Image& image, const DisplacementField& delta);

// Zernike basis and kernel synthesizer shared by all samples of a run.
class OpticsContext {
 public:
  explicit OpticsContext(const ZernikeConfig& config);
  OpticsContext(const OpticsContext&) = delete;
  OpticsContext& operator=(const OpticsContext&) = delete;

  const ZernikeBasis& basis() const noexcept { return basis_; }
  const PsfSynthesizer& synthesizer() const noexcept { return synthesizer_; }

 private:
  ZernikeBasis basis_;
  PsfSynthesizer synthesizer_;
};

struct SampleSpec {
  std::string sample_id;
  double d_over_r0 = 0.0;
  std::uint64_t seed = 0;
};

struct DegradedSample {
  Image turb;
  Image tilt;
  Image clean;
  std::optional<Image> blur;  // kept when persist_blur or debug is set
  BackwardFlow backward_flow;
  DisplacementField forward_flow;
  ModulationMap modulation;
  MetadataRecord metadata;  // file digests are filled in by the writer
};

// Full degradation of one scene. The PSF grid and the raw displacement are
// drawn in that order from one generator seeded with spec.seed.
DegradedSample degrade_scene(const CleanScene& scene, const OpticalConfig& config, const SampleSpec& spec,
                             const OpticsContext& optics, unsigned splat_workers = 1);

}  // namespace d2turb
