#include "core/flow_inverse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "core/error.hpp"

namespace d2turb {

namespace {

constexpr std::size_t kChunkRows = 32;
constexpr int kMaxRelaxSweeps = 64;
constexpr double kRelaxTolerance = 1e-7;

// Accumulators for the target rows reachable from one chunk of source rows.
struct ChunkAccumulator {
  long first_row = 0;
  long row_count = 0;
  std::vector<double> sum;  // per pixel: vx, vy, weight
  double dropped = 0.0;
};

ChunkAccumulator splat_chunk(const DisplacementField& delta, std::size_t row_begin, std::size_t row_end) {
  const auto& d = delta.vectors;
  const long height = static_cast<long>(d.height());
  const long width = static_cast<long>(d.width());

  double max_dy = 0.0;
  for (std::size_t y = row_begin; y < row_end; ++y) {
    for (std::size_t x = 0; x < d.width(); ++x) max_dy = std::max(max_dy, std::abs(static_cast<double>(d(y, x, 1))));
  }
  const long reach = static_cast<long>(std::ceil(max_dy)) + 1;
  ChunkAccumulator acc;
  acc.first_row = std::max(0L, static_cast<long>(row_begin) - reach);
  const long last_row = std::min(height - 1, static_cast<long>(row_end) - 1 + reach);
  acc.row_count = std::max(0L, last_row - acc.first_row + 1);
  acc.sum.assign(static_cast<std::size_t>(acc.row_count * width) * 3, 0.0);

  for (std::size_t y = row_begin; y < row_end; ++y) {
    for (std::size_t x = 0; x < d.width(); ++x) {
      const double dx = d(y, x, 0);
      const double dy = d(y, x, 1);
      const double tx = static_cast<double>(x) + dx;
      const double ty = static_cast<double>(y) + dy;
      const double fx0 = std::floor(tx);
      const double fy0 = std::floor(ty);
      const double fx = tx - fx0;
      const double fy = ty - fy0;
      const long x0 = static_cast<long>(fx0);
      const long y0 = static_cast<long>(fy0);
      const double weights[4] = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};
      const long xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const long ys[4] = {y0, y0, y0 + 1, y0 + 1};
      for (int k = 0; k < 4; ++k) {
        const double w = weights[k];
        if (w == 0.0) continue;
        if (xs[k] < 0 || xs[k] >= width || ys[k] < 0 || ys[k] >= height) {
          acc.dropped += w;
          continue;
        }
        const std::size_t idx = static_cast<std::size_t>((ys[k] - acc.first_row) * width + xs[k]) * 3;
        acc.sum[idx] += w * -dx;
        acc.sum[idx + 1] += w * -dy;
        acc.sum[idx + 2] += w;
      }
    }
  }
  return acc;
}

void check_finite(const DisplacementField& delta) {
  for (float v : delta.vectors.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "displacement field contains non-finite values");
  }
}

}  // namespace

std::size_t BackwardFlow::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.values().begin(), valid.values().end(), std::uint8_t{1}));
}

BackwardFlow splat_backward(const DisplacementField& delta, unsigned workers, SplatDiagnostics* diagnostics) {
  if (delta.vectors.channels() != 2) throw Error(ErrorCode::Shape, "displacement field must have 2 channels");
  check_finite(delta);
  const std::size_t height = delta.height();
  const std::size_t width = delta.width();
  const std::size_t chunk_count = (height + kChunkRows - 1) / kChunkRows;

  std::vector<ChunkAccumulator> chunks(chunk_count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t c = next++; c < chunk_count; c = next++) {
      chunks[c] = splat_chunk(delta, c * kChunkRows, std::min(height, (c + 1) * kChunkRows));
    }
  };
  const unsigned pool = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(chunk_count)));
  if (pool == 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    for (unsigned t = 0; t < pool; ++t) threads.emplace_back(work);
  }

  std::vector<double> total(height * width * 3, 0.0);
  double dropped = 0.0;
  for (const auto& chunk : chunks) {
    const std::size_t offset = static_cast<std::size_t>(chunk.first_row) * width * 3;
    for (std::size_t i = 0; i < chunk.sum.size(); ++i) total[offset + i] += chunk.sum[i];
    dropped += chunk.dropped;
  }

  BackwardFlow flow{Grid<float>(height, width, 2, 0.0f), Grid<std::uint8_t>(height, width, 1, 0)};
  double deposited = 0.0;
  std::size_t holes = 0;
  for (std::size_t p = 0; p < height * width; ++p) {
    const double w = total[3 * p + 2];
    deposited += w;
    if (w >= kCoverageThreshold) {
      flow.vectors.data()[2 * p] = static_cast<float>(total[3 * p] / w);
      flow.vectors.data()[2 * p + 1] = static_cast<float>(total[3 * p + 1] / w);
      flow.valid.data()[p] = 1;
    } else {
      ++holes;
    }
  }
  if (diagnostics != nullptr) *diagnostics = SplatDiagnostics{deposited, dropped, holes};
  return flow;
}

BackwardFlow fill_holes(BackwardFlow flow) {
  const std::size_t height = flow.height();
  const std::size_t width = flow.width();
  const std::size_t n = height * width;
  if (flow.valid.size() != n) throw Error(ErrorCode::Shape, "validity mask does not match flow dimensions");
  const std::size_t valid = flow.valid_count();
  if (valid == 0) throw Error(ErrorCode::Unfillable, "flow has no valid pixels to fill from");
  if (valid == n) return flow;

  std::vector<double> value(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) value[i] = flow.vectors.data()[i];
  std::vector<std::uint8_t> filled(flow.valid.values().begin(), flow.valid.values().end());

  // Onion peel: each pass fills holes touching already-filled pixels.
  std::vector<std::size_t> frontier;
  std::vector<double> staged;
  for (bool pending = true; pending;) {
    pending = false;
    frontier.clear();
    staged.clear();
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const std::size_t p = y * width + x;
        if (filled[p]) continue;
        double sx = 0.0;
        double sy = 0.0;
        int count = 0;
        for (int oy = -1; oy <= 1; ++oy) {
          for (int ox = -1; ox <= 1; ++ox) {
            const long ny = static_cast<long>(y) + oy;
            const long nx = static_cast<long>(x) + ox;
            if ((oy == 0 && ox == 0) || ny < 0 || nx < 0 || ny >= static_cast<long>(height) ||
                nx >= static_cast<long>(width)) {
              continue;
            }
            const std::size_t q = static_cast<std::size_t>(ny) * width + static_cast<std::size_t>(nx);
            if (!filled[q]) continue;
            sx += value[2 * q];
            sy += value[2 * q + 1];
            ++count;
          }
        }
        if (count == 0) {
          pending = true;
          continue;
        }
        frontier.push_back(p);
        staged.push_back(sx / count);
        staged.push_back(sy / count);
      }
    }
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      value[2 * frontier[i]] = staged[2 * i];
      value[2 * frontier[i] + 1] = staged[2 * i + 1];
      filled[frontier[i]] = 1;
    }
  }

  // Jacobi relaxation of the hole pixels (harmonic interpolation).
  std::vector<std::size_t> holes;
  for (std::size_t p = 0; p < n; ++p) {
    if (!flow.valid.data()[p]) holes.push_back(p);
  }
  std::vector<double> next(2 * holes.size());
  for (int sweep = 0; sweep < kMaxRelaxSweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < holes.size(); ++i) {
      const std::size_t p = holes[i];
      const std::size_t y = p / width;
      const std::size_t x = p % width;
      double sx = 0.0;
      double sy = 0.0;
      int count = 0;
      auto add = [&](std::size_t q) {
        sx += value[2 * q];
        sy += value[2 * q + 1];
        ++count;
      };
      if (y > 0) add(p - width);
      if (y + 1 < height) add(p + width);
      if (x > 0) add(p - 1);
      if (x + 1 < width) add(p + 1);
      next[2 * i] = sx / count;
      next[2 * i + 1] = sy / count;
      change = std::max({change, std::abs(next[2 * i] - value[2 * p]), std::abs(next[2 * i + 1] - value[2 * p + 1])});
    }
    for (std::size_t i = 0; i < holes.size(); ++i) {
      value[2 * holes[i]] = next[2 * i];
      value[2 * holes[i] + 1] = next[2 * i + 1];
    }
    if (change < kRelaxTolerance) break;
  }

  for (std::size_t p : holes) {
    flow.vectors.data()[2 * p] = static_cast<float>(value[2 * p]);
    flow.vectors.data()[2 * p + 1] = static_cast<float>(value[2 * p + 1]);
  }
  return flow;
}

BackwardFlow forward_splat_invert(const DisplacementField& delta, unsigned workers, SplatDiagnostics* diagnostics) {
  return fill_holes(splat_backward(delta, workers, diagnostics));
}

}  // namespace d2turb
