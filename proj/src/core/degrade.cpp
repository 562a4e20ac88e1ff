#include "core/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/log.hpp"

namespace d2turb {

namespace {

std::size_t reflect101(long i, long n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return static_cast<std::size_t>(i);
}

// Per-row (or per-column) enclosing anchor cell and interpolation weight.
struct AxisCell {
  std::vector<int> cell;
  std::vector<double> t;
};

AxisCell axis_cells(std::size_t n, const std::vector<double>& anchors) {
  AxisCell out;
  const int g = static_cast<int>(anchors.size());
  out.cell.resize(n);
  out.t.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(i);
    int c = 0;
    while (c + 2 < g && anchors[c + 1] <= v) ++c;
    const double span = anchors[c + 1] - anchors[c];
    out.cell[i] = c;
    out.t[i] = span > 0.0 ? std::clamp((v - anchors[c]) / span, 0.0, 1.0) : 0.0;
  }
  return out;
}

}  // namespace

void CleanScene::validate() const {
  if (image.channels() != 3) throw Error(ErrorCode::Shape, "clean image must have 3 channels");
  if (!image.same_extent(depth.values) || depth.values.channels() != 1) {
    throw Error(ErrorCode::Shape, "image is " + std::to_string(image.height()) + "x" + std::to_string(image.width()) +
                                      " but depth is " + std::to_string(depth.values.height()) + "x" +
                                      std::to_string(depth.values.width()));
  }
  for (float v : image.values()) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw Error(ErrorCode::InvalidInput, "clean image values must be finite and in [0,1]");
    }
  }
  validate_depth(depth);
}

Image spatially_varying_blur(const Image& image, const PsfGrid& psfs, const ModulationMap& modulation) {
  const std::size_t height = image.height();
  const std::size_t width = image.width();
  const std::size_t channels = image.channels();
  if (!image.same_extent(modulation.values)) throw Error(ErrorCode::Shape, "modulation map does not match image");
  if (psfs.grid_y < 2 || psfs.grid_x < 2 || psfs.kernels.size() != static_cast<std::size_t>(psfs.grid_y * psfs.grid_x) ||
      psfs.anchor_y.size() != static_cast<std::size_t>(psfs.grid_y) ||
      psfs.anchor_x.size() != static_cast<std::size_t>(psfs.grid_x)) {
    throw Error(ErrorCode::Shape, "malformed PSF grid");
  }
  const int k = psfs.kernels.front().size;
  for (const Psf& psf : psfs.kernels) {
    if (psf.size != k || psf.weights.size() != static_cast<std::size_t>(k) * k) {
      throw Error(ErrorCode::Shape, "PSF grid kernels differ in size");
    }
  }
  if (static_cast<std::size_t>(k) > std::min(height, width)) {
    throw Error(ErrorCode::Domain, "kernel size " + std::to_string(k) + " exceeds image " + std::to_string(height) +
                                       "x" + std::to_string(width));
  }

  Image out = image;
  const auto m = modulation.values.values();
  if (std::all_of(m.begin(), m.end(), [](double v) { return v == 0.0; })) return out;

  // Planar reflect-101 padded copy.
  const long h = k / 2;
  const std::size_t pw = width + 2 * static_cast<std::size_t>(h);
  const std::size_t ph = height + 2 * static_cast<std::size_t>(h);
  std::vector<float> padded(channels * ph * pw);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < ph; ++y) {
      const std::size_t sy = reflect101(static_cast<long>(y) - h, static_cast<long>(height));
      for (std::size_t x = 0; x < pw; ++x) {
        const std::size_t sx = reflect101(static_cast<long>(x) - h, static_cast<long>(width));
        padded[(c * ph + y) * pw + x] = image(sy, sx, c);
      }
    }
  }

  // Flipped float kernels so that conv(y, x) = sum kf[a][b] * P(y + a, x + b).
  std::vector<std::vector<float>> flipped(psfs.kernels.size());
  for (std::size_t i = 0; i < psfs.kernels.size(); ++i) {
    const Psf& psf = psfs.kernels[i];
    auto& kf = flipped[i];
    kf.resize(static_cast<std::size_t>(k) * k);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) kf[static_cast<std::size_t>(a) * k + b] = static_cast<float>(psf.at(k - 1 - a, k - 1 - b));
    }
  }

  const AxisCell rows = axis_cells(height, psfs.anchor_y);
  const AxisCell cols = axis_cells(width, psfs.anchor_x);

  std::vector<float> acc(4 * channels * width);
  for (int cy = 0; cy + 1 < psfs.grid_y; ++cy) {
    for (int cx = 0; cx + 1 < psfs.grid_x; ++cx) {
      const auto x_begin = static_cast<std::size_t>(std::find(cols.cell.begin(), cols.cell.end(), cx) - cols.cell.begin());
      const auto x_end = static_cast<std::size_t>(std::find_if(cols.cell.begin() + static_cast<long>(x_begin), cols.cell.end(),
                                                               [cx](int c) { return c != cx; }) -
                                                  cols.cell.begin());
      if (x_begin >= x_end) continue;
      const std::size_t span = x_end - x_begin;
      const float* corner[4] = {flipped[static_cast<std::size_t>(cy) * psfs.grid_x + cx].data(),
                                flipped[static_cast<std::size_t>(cy) * psfs.grid_x + cx + 1].data(),
                                flipped[static_cast<std::size_t>(cy + 1) * psfs.grid_x + cx].data(),
                                flipped[static_cast<std::size_t>(cy + 1) * psfs.grid_x + cx + 1].data()};

      for (std::size_t y = 0; y < height; ++y) {
        if (rows.cell[y] != cy) continue;
        bool active = false;
        for (std::size_t x = x_begin; x < x_end; ++x) active = active || m[y * width + x] != 0.0;
        if (!active) continue;

        std::fill(acc.begin(), acc.end(), 0.0f);
        for (int q = 0; q < 4; ++q) {
          const float* kf = corner[q];
          for (std::size_t c = 0; c < channels; ++c) {
            float* dst = acc.data() + (static_cast<std::size_t>(q) * channels + c) * width;
            for (int a = 0; a < k; ++a) {
              const float* src_row = padded.data() + (c * ph + y + static_cast<std::size_t>(a)) * pw + x_begin;
              for (int b = 0; b < k; ++b) {
                const float w = kf[static_cast<std::size_t>(a) * k + b];
                if (w == 0.0f) continue;
                const float* src = src_row + b;
                for (std::size_t i = 0; i < span; ++i) dst[i] += w * src[i];
              }
            }
          }
        }

        const double ty = rows.t[y];
        for (std::size_t i = 0; i < span; ++i) {
          const std::size_t x = x_begin + i;
          const double mv = m[y * width + x];
          if (mv == 0.0) continue;
          const double tx = cols.t[x];
          const double w[4] = {(1.0 - ty) * (1.0 - tx), (1.0 - ty) * tx, ty * (1.0 - tx), ty * tx};
          for (std::size_t c = 0; c < channels; ++c) {
            double blurred = 0.0;
            for (int q = 0; q < 4; ++q) {
              blurred += w[q] * static_cast<double>(acc[(static_cast<std::size_t>(q) * channels + c) * width + i]);
            }
            const double orig = image(y, x, c);
            out(y, x, c) = static_cast<float>(mv * blurred + (1.0 - mv) * orig);
          }
        }
      }
    }
  }
  return out;
}

Image backward_warp(const Image& image, const DisplacementField& delta) {
  if (!image.same_extent(delta.vectors) || delta.vectors.channels() != 2) {
    throw Error(ErrorCode::Shape, "displacement field does not match image");
  }
  for (float v : delta.vectors.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "displacement field contains non-finite values");
  }
  const std::size_t height = image.height();
  const std::size_t width = image.width();
  const std::size_t channels = image.channels();
  const double max_x = static_cast<double>(width) - 1.0;
  const double max_y = static_cast<double>(height) - 1.0;
  Image out(height, width, channels);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = std::clamp(static_cast<double>(x) + delta.vectors(y, x, 0), 0.0, max_x);
      const double sy = std::clamp(static_cast<double>(y) + delta.vectors(y, x, 1), 0.0, max_y);
      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      const double fx = sx - fx0;
      const double fy = sy - fy0;
      const auto x0 = static_cast<std::size_t>(fx0);
      const auto y0 = static_cast<std::size_t>(fy0);
      const std::size_t x1 = std::min(x0 + 1, width - 1);
      const std::size_t y1 = std::min(y0 + 1, height - 1);
      for (std::size_t c = 0; c < channels; ++c) {
        const double top = (1.0 - fx) * image(y0, x0, c) + fx * image(y0, x1, c);
        const double bottom = (1.0 - fx) * image(y1, x0, c) + fx * image(y1, x1, c);
        out(y, x, c) = static_cast<float>((1.0 - fy) * top + fy * bottom);
      }
    }
  }
  return out;
}

OpticsContext::OpticsContext(const ZernikeConfig& config)
    : basis_(ZernikeBasis::build(config.modes, config.pupil_resolution)), synthesizer_(basis_, config.kernel_size) {}

DegradedSample degrade_scene(const CleanScene& scene, const OpticalConfig& config, const SampleSpec& spec,
                             const OpticsContext& optics, unsigned splat_workers) {
  in_stage("scene", [&] { scene.validate(); });
  in_stage("config", [&] { config.validate(); });
  if (optics.basis().mode_count() != config.zernike.modes ||
      optics.basis().pupil_resolution() != config.zernike.pupil_resolution ||
      optics.synthesizer().kernel_size() != config.zernike.kernel_size) {
    throw Error(ErrorCode::Internal, "optics context does not match the zernike config", "config");
  }
  const std::size_t height = scene.image.height();
  const std::size_t width = scene.image.width();

  DegradedSample sample;
  PathGeometry geometry = config.path_geometry();
  sample.modulation = in_stage("modulation", [&] {
    if (config.flat_field_mode) return flat_modulation(height, width);
    const DistanceMap distance = project_depth(scene.depth, geometry);
    if (config.geometry.z_max_mode == ZmaxMode::Scene) geometry = config.path_geometry(&distance);
    return modulation_map(distance, geometry.z_max_m);
  });

  Rng rng(spec.seed);
  const PsfGrid psfs = in_stage("psf", [&] {
    return build_psf_grid(config.psf_grid_spec(), spec.d_over_r0, height, width, optics.synthesizer(), rng);
  });
  if (psfs.crop_warning()) {
    logger().warn("{}: {:.1f}% of kernel energy fell outside the {}x{} crop", spec.sample_id,
                  100.0 * psfs.max_energy_outside_crop(), config.zernike.kernel_size, config.zernike.kernel_size);
  }
  const TiltSpectrumParams tilt = config.tilt_params(spec.d_over_r0);
  const DisplacementField raw = in_stage("tilt", [&] { return synthesize_raw_field(height, width, tilt, rng); });
  sample.forward_flow = in_stage("tilt", [&] { return modulate_displacement(raw, sample.modulation); });

  Image blur = in_stage("blur", [&] { return spatially_varying_blur(scene.image, psfs, sample.modulation); });
  sample.turb = in_stage("warp", [&] { return backward_warp(blur, sample.forward_flow); });
  sample.tilt = in_stage("warp", [&] { return backward_warp(scene.image, sample.forward_flow); });
  sample.clean = scene.image;
  if (config.output.persist_blur || config.output.debug) sample.blur = std::move(blur);

  SplatDiagnostics diagnostics;
  sample.backward_flow =
      in_stage("flow_inverse", [&] { return forward_splat_invert(sample.forward_flow, splat_workers, &diagnostics); });

  MetadataRecord& meta = sample.metadata;
  meta.sample_id = spec.sample_id;
  meta.source_id = scene.identifier;
  meta.seed = spec.seed;
  meta.d_over_r0 = spec.d_over_r0;
  meta.category = categorize_strength(spec.d_over_r0);
  meta.path_length_m = geometry.path_length_m;
  meta.baseline_offset = geometry.baseline_offset;
  meta.z_max_m = geometry.z_max_m;
  meta.tilt_rms_px = tilt.tilt_rms_px;
  meta.kernel_size = config.zernike.kernel_size;
  meta.psf_grid_y = config.zernike.grid_y;
  meta.psf_grid_x = config.zernike.grid_x;
  meta.flat_field_mode = config.flat_field_mode;
  meta.height = height;
  meta.width = width;
  meta.psf_max_energy_outside_crop = psfs.max_energy_outside_crop();
  meta.flow_hole_count = diagnostics.hole_count;
  return sample;
}

}  // namespace d2turb
