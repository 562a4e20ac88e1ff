#include "core/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "core/error.hpp"

namespace d2turb {

namespace {

constexpr int kRadius = 5;
constexpr double kSigma = 1.5;

std::array<double, 2 * kRadius + 1> gaussian_window() {
  std::array<double, 2 * kRadius + 1> w{};
  double sum = 0.0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    w[i + kRadius] = std::exp(-0.5 * i * i / (kSigma * kSigma));
    sum += w[i + kRadius];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable Gaussian filter evaluated only where the window fits.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w) {
  static const auto g = gaussian_window();
  const std::size_t oh = h - 2 * kRadius;
  const std::size_t ow = w - 2 * kRadius;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k <= 2 * kRadius; ++k) s += g[k] * src[y * w + x + k];
      rows[y * ow + x] = s;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k <= 2 * kRadius; ++k) s += g[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  if (!a.same_extent(b) || a.channels() != b.channels()) throw Error(ErrorCode::Shape, "psnr: image dimensions differ");
  if (a.empty()) throw Error(ErrorCode::Shape, "psnr: empty images");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]);
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

Grid<double> luma(const Image& image) {
  Grid<double> out(image.height(), image.width());
  for (std::size_t p = 0; p < image.pixel_count(); ++p) {
    if (image.channels() == 1) {
      out.data()[p] = image.data()[p];
    } else {
      const float* px = image.data() + p * image.channels();
      out.data()[p] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
  }
  return out;
}

double ssim(const Image& a, const Image& b) {
  if (!a.same_extent(b) || a.channels() != b.channels()) throw Error(ErrorCode::Shape, "ssim: image dimensions differ");
  if (a.channels() != 1 && a.channels() != 3) throw Error(ErrorCode::Shape, "ssim: expected 1 or 3 channels");
  const std::size_t h = a.height();
  const std::size_t w = a.width();
  if (h < 2 * kRadius + 1 || w < 2 * kRadius + 1) throw Error(ErrorCode::Domain, "ssim: image smaller than the 11x11 window");

  const Grid<double> la = luma(a);
  const Grid<double> lb = luma(b);
  const std::size_t n = h * w;
  std::vector<double> x(la.values().begin(), la.values().end());
  std::vector<double> y(lb.values().begin(), lb.values().end());
  std::vector<double> xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto ux = filter_valid(x, h, w);
  const auto uy = filter_valid(y, h, w);
  const auto uxx = filter_valid(xx, h, w);
  const auto uyy = filter_valid(yy, h, w);
  const auto uxy = filter_valid(xy, h, w);

  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  double total = 0.0;
  for (std::size_t i = 0; i < ux.size(); ++i) {
    const double vx = uxx[i] - ux[i] * ux[i];
    const double vy = uyy[i] - uy[i] * uy[i];
    const double vxy = uxy[i] - ux[i] * uy[i];
    total += ((2.0 * ux[i] * uy[i] + c1) * (2.0 * vxy + c2)) / ((ux[i] * ux[i] + uy[i] * uy[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(ux.size());
}

}  // namespace d2turb
