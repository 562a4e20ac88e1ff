#include "core/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "core/config.hpp"
#include "core/degrade.hpp"
#include "core/error.hpp"
#include "core/fft.hpp"
#include "core/flow_inverse.hpp"
#include "core/rng.hpp"
#include "core/zernike.hpp"

namespace d2turb {

double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::InvalidInput, "regression needs >= 2 paired points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

std::vector<double> radial_power_spectrum(const DisplacementField& field, std::size_t channel) {
  const std::size_t h = field.height();
  const std::size_t w = field.width();
  std::vector<std::complex<double>> spec(h * w);
  for (std::size_t i = 0; i < h * w; ++i) spec[i] = field.vectors.data()[2 * i + channel];
  fft::transform_2d(spec, h, w, fft::Direction::Forward);
  const std::size_t r_max = std::min(h, w) / 2;
  std::vector<double> sum(r_max + 1, 0.0);
  std::vector<double> count(r_max + 1, 0.0);
  for (std::size_t iy = 0; iy < h; ++iy) {
    const double fy = static_cast<double>(fft::signed_frequency(iy, h));
    for (std::size_t ix = 0; ix < w; ++ix) {
      const double fx = static_cast<double>(fft::signed_frequency(ix, w));
      const auto r = static_cast<std::size_t>(std::lround(std::hypot(fy, fx)));
      if (r > r_max) continue;
      sum[r] += std::norm(spec[iy * w + ix]);
      count[r] += 1.0;
    }
  }
  for (std::size_t r = 0; r <= r_max; ++r) sum[r] = count[r] > 0 ? sum[r] / count[r] : 0.0;
  return sum;
}

double spectral_slope(const std::vector<DisplacementField>& fields, std::size_t r_lo, std::size_t r_hi) {
  if (fields.empty()) throw Error(ErrorCode::InvalidInput, "no fields");
  std::vector<double> mean;
  for (const auto& f : fields) {
    for (std::size_t c = 0; c < 2; ++c) {
      const auto p = radial_power_spectrum(f, c);
      if (mean.empty()) mean.assign(p.size(), 0.0);
      for (std::size_t r = 0; r < p.size() && r < mean.size(); ++r) mean[r] += p[r];
    }
  }
  if (r_hi >= mean.size() || r_lo == 0 || r_lo >= r_hi) throw Error(ErrorCode::Domain, "bad radius band");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t r = r_lo; r <= r_hi; ++r) {
    lx.push_back(std::log(static_cast<double>(r)));
    ly.push_back(std::log(mean[r]));
  }
  return regression_slope(lx, ly);
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

SelftestCheck check_variance_scaling() {
  const int modes = 15;
  const double ratios[4] = {1.0, 2.0, 4.0, 8.0};
  std::vector<double> lx;
  std::vector<double> ly;
  Rng rng(mix_seed(kDefaultGlobalSeed, 101));
  for (double d : ratios) {
    const CoefficientSampler sampler(noll_covariance(modes, d));
    double total = 0.0;
    const int draws = 2000;
    for (int i = 0; i < draws; ++i) total += sampler.draw(rng).squaredNorm();
    lx.push_back(std::log(d));
    ly.push_back(std::log(total / draws));
  }
  const double slope = regression_slope(lx, ly);
  return {"variance_scaling", std::abs(slope - 5.0 / 3.0) < 0.05, "slope " + fmt(slope) + " (expected 5/3 +- 0.05)"};
}

SelftestCheck check_spectral_slope() {
  // Pure power law: both roll-offs pushed outside the fitted band.
  TiltSpectrumParams params;
  params.corr_length_px = 1024.0;
  params.inner_scale_px = 0.0;
  std::vector<DisplacementField> fields;
  for (int s = 0; s < 8; ++s) {
    Rng rng(mix_seed(kDefaultGlobalSeed, 200 + static_cast<std::uint64_t>(s)));
    fields.push_back(synthesize_raw_field(128, 128, params, rng));
  }
  const double slope = spectral_slope(fields, 5, 50);
  return {"spectral_slope", std::abs(slope + 11.0 / 3.0) < 0.3, "slope " + fmt(slope) + " (expected -11/3 +- 0.3)"};
}

SelftestCheck check_psf_validity() {
  const ZernikeBasis basis = ZernikeBasis::build(36, 128);
  const PsfSynthesizer synth(basis, 33);
  const CoefficientSampler sampler(noll_covariance(36, 3.0));
  Rng rng(mix_seed(kDefaultGlobalSeed, 300));
  double worst = 0.0;
  bool nonnegative = true;
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd c = sampler.draw(rng);
    const Psf psf = synth.synthesize(std::span<const double>(c.data(), static_cast<std::size_t>(c.size())));
    double sum = 0.0;
    for (double w : psf.weights) {
      nonnegative = nonnegative && w >= 0.0;
      sum += w;
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return {"psf_validity", nonnegative && worst < 1e-6, "max |sum - 1| " + fmt(worst)};
}

SelftestCheck check_round_trip() {
  const std::size_t n = 128;
  Image img(n, n, 3);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double v = 0.5 + 0.25 * std::sin(2.0 * std::numbers::pi * x / 37.0) * std::cos(2.0 * std::numbers::pi * y / 29.0);
      for (std::size_t c = 0; c < 3; ++c) img(y, x, c) = static_cast<float>(v);
    }
  }
  TiltSpectrumParams params;
  params.tilt_rms_px = 2.0;
  Rng rng(mix_seed(kDefaultGlobalSeed, 400));
  const DisplacementField delta = synthesize_raw_field(n, n, params, rng);
  const BackwardFlow v = forward_splat_invert(delta);
  const Image back = backward_warp(backward_warp(img, delta), DisplacementField{v.vectors});
  std::vector<double> err;
  for (std::size_t y = 4; y + 4 < n; ++y) {
    for (std::size_t x = 4; x + 4 < n; ++x) {
      for (std::size_t c = 0; c < 3; ++c) err.push_back(std::abs(back(y, x, c) - img(y, x, c)));
    }
  }
  std::nth_element(err.begin(), err.begin() + static_cast<long>(err.size() / 2), err.end());
  const double median = err[err.size() / 2];
  return {"round_trip", median < 2.0 / 255.0, "median abs error " + fmt(median) + " (limit 2/255)"};
}

}  // namespace

std::vector<SelftestCheck> run_selftest() {
  std::vector<SelftestCheck> out;
  for (auto fn : {check_variance_scaling, check_spectral_slope, check_psf_validity, check_round_trip}) {
    try {
      out.push_back(fn());
    } catch (const Error& e) {
      out.push_back({"exception", false, e.what()});
    }
  }
  return out;
}

}  // namespace d2turb
