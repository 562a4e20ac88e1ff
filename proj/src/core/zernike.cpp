#include "core/zernike.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "core/error.hpp"
#include "core/fft.hpp"

namespace d2turb {

namespace {

double factorial(int k) {
  double out = 1.0;
  for (int i = 2; i <= k; ++i) out *= i;
  return out;
}

double radial_polynomial(int n, int m_abs, double rho) {
  double sum = 0.0;
  for (int k = 0; k <= (n - m_abs) / 2; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double coeff =
        sign * factorial(n - k) / (factorial(k) * factorial((n + m_abs) / 2 - k) * factorial((n - m_abs) / 2 - k));
    sum += coeff * std::pow(rho, n - 2 * k);
  }
  return sum;
}

double zernike_polar(const ZernikeIndex& idx, double rho, double theta) {
  const int m_abs = std::abs(idx.m);
  const double radial = radial_polynomial(idx.n, m_abs, rho);
  if (idx.m == 0) return std::sqrt(idx.n + 1.0) * radial;
  const double norm = std::sqrt(2.0 * (idx.n + 1.0));
  return idx.m > 0 ? norm * radial * std::cos(m_abs * theta) : norm * radial * std::sin(m_abs * theta);
}

// Smallest integer >= n whose only prime factors are 2, 3 and 5.
int smooth_size(int n) {
  for (int candidate = std::max(n, 1);; ++candidate) {
    int r = candidate;
    for (int p : {2, 3, 5}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return candidate;
  }
}

}  // namespace

ZernikeIndex noll_to_nm(int j) {
  if (j < 1) throw Error(ErrorCode::Domain, "Noll index must be >= 1, got " + std::to_string(j));
  int n = 0;
  int remainder = j - 1;
  while (remainder > n) {
    ++n;
    remainder -= n;
  }
  const int m_abs = (n % 2) + 2 * ((remainder + ((n + 1) % 2)) / 2);
  if (m_abs == 0) return {n, 0};
  return {n, (j % 2 == 0) ? m_abs : -m_abs};
}

double zernike_value(int j, double x, double y) {
  const double rho = std::hypot(x, y);
  if (rho > 1.0) return 0.0;
  return zernike_polar(noll_to_nm(j), rho, std::atan2(y, x));
}

ZernikeBasis ZernikeBasis::build(int mode_count, int pupil_resolution) {
  if (mode_count < 1) throw Error(ErrorCode::Domain, "Zernike mode count must be >= 1");
  if (pupil_resolution < 32) throw Error(ErrorCode::Domain, "pupil resolution must be >= 32");
  ZernikeBasis basis;
  basis.mode_count_ = mode_count;
  basis.resolution_ = pupil_resolution;

  const double half = 0.5 * pupil_resolution;
  std::vector<double> rho;
  std::vector<double> theta;
  for (int r = 0; r < pupil_resolution; ++r) {
    const double y = (r + 0.5 - half) / half;
    for (int c = 0; c < pupil_resolution; ++c) {
      const double x = (c + 0.5 - half) / half;
      const double radius = std::hypot(x, y);
      if (radius <= 1.0) {
        basis.pupil_indices_.push_back(static_cast<std::uint32_t>(r * pupil_resolution + c));
        rho.push_back(radius);
        theta.push_back(std::atan2(y, x));
      }
    }
  }

  const std::size_t count = basis.pupil_indices_.size();
  basis.table_.resize(static_cast<std::size_t>(mode_count) * count);
  for (int j = 1; j <= mode_count; ++j) {
    const ZernikeIndex idx = noll_to_nm(j);
    double* row = basis.table_.data() + static_cast<std::size_t>(j - 1) * count;
    for (std::size_t k = 0; k < count; ++k) row[k] = zernike_polar(idx, rho[k], theta[k]);
  }
  return basis;
}

std::span<const double> ZernikeBasis::mode(int j) const {
  if (j < 1 || j > mode_count_) throw Error(ErrorCode::Domain, "mode index out of range: " + std::to_string(j));
  const std::size_t count = pupil_indices_.size();
  return {table_.data() + static_cast<std::size_t>(j - 1) * count, count};
}

double ZernikeBasis::pixel_area() const noexcept {
  const double step = 2.0 / resolution_;
  return step * step;
}

std::vector<double> ZernikeBasis::phase(std::span<const double> coefficients, bool exclude_tilt) const {
  if (coefficients.size() != static_cast<std::size_t>(mode_count_)) {
    throw Error(ErrorCode::Shape, "coefficient vector length " + std::to_string(coefficients.size()) +
                                      " does not match mode count " + std::to_string(mode_count_));
  }
  std::vector<double> out(pupil_indices_.size(), 0.0);
  for (int j = 1; j <= mode_count_; ++j) {
    if (exclude_tilt && (j == 2 || j == 3)) continue;
    const double a = coefficients[j - 1];
    if (a == 0.0) continue;
    auto values = mode(j);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += a * values[k];
  }
  return out;
}

double kolmogorov_zernike_constant() {
  // [(24/5) G(6/5)]^(5/6) G(14/3) G(11/6)^2 / (2^(8/3) pi)
  const double fried = std::pow(24.0 / 5.0 * std::tgamma(6.0 / 5.0), 5.0 / 6.0);
  const double g116 = std::tgamma(11.0 / 6.0);
  return fried * std::tgamma(14.0 / 3.0) * g116 * g116 / (std::pow(2.0, 8.0 / 3.0) * std::numbers::pi);
}

Eigen::MatrixXd noll_covariance(int mode_count, double d_over_r0) {
  if (mode_count < 3) throw Error(ErrorCode::Domain, "covariance needs at least 3 modes");
  if (!(d_over_r0 >= 0.0) || !std::isfinite(d_over_r0)) {
    throw Error(ErrorCode::Domain, "D/r0 must be finite and >= 0");
  }
  const double scale = kolmogorov_zernike_constant() * std::pow(d_over_r0, 5.0 / 3.0);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(mode_count, mode_count);
  for (int j = 2; j <= mode_count; ++j) {
    const ZernikeIndex a = noll_to_nm(j);
    for (int jp = j; jp <= mode_count; ++jp) {
      const ZernikeIndex b = noll_to_nm(jp);
      if (a.m != b.m) continue;
      const int m_abs = std::abs(a.m);
      const double sign = ((a.n + b.n - 2 * m_abs) / 2) % 2 == 0 ? 1.0 : -1.0;
      const double nn = a.n + b.n;
      const double dn = a.n - b.n;
      const double value = scale * sign * std::sqrt((a.n + 1.0) * (b.n + 1.0)) * std::tgamma((nn - 5.0 / 3.0) / 2.0) /
                           (std::tgamma((dn + 17.0 / 3.0) / 2.0) * std::tgamma((-dn + 17.0 / 3.0) / 2.0) *
                            std::tgamma((nn + 23.0 / 3.0) / 2.0));
      cov(j - 1, jp - 1) = value;
      cov(jp - 1, j - 1) = value;
    }
  }

  if (scale > 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
    const double lo = solver.eigenvalues().minCoeff();
    const double hi = solver.eigenvalues().maxCoeff();
    if (lo < -1e-10 * std::max(hi, 1e-300)) {
      throw Error(ErrorCode::Internal, "Zernike covariance is not positive semi-definite (min eigenvalue " +
                                           std::to_string(lo) + ")");
    }
  }
  return cov;
}

CoefficientSampler::CoefficientSampler(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
    throw Error(ErrorCode::Shape, "covariance must be a non-empty square matrix");
  }
  const Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::Internal, "covariance factorisation failed");
  const double hi = std::max(solver.eigenvalues().maxCoeff(), 0.0);
  Eigen::VectorXd root(sym.rows());
  for (Eigen::Index i = 0; i < root.size(); ++i) {
    const double lambda = solver.eigenvalues()(i);
    if (lambda < -1e-10 * std::max(hi, 1e-300)) {
      throw Error(ErrorCode::Internal, "covariance has a negative eigenvalue " + std::to_string(lambda));
    }
    root(i) = std::sqrt(std::max(lambda, 0.0));
  }
  factor_ = solver.eigenvectors() * root.asDiagonal() * solver.eigenvectors().transpose();
}

Eigen::VectorXd CoefficientSampler::draw(Rng& rng) const {
  Eigen::VectorXd z(factor_.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return factor_ * z;
}

AberrationSample sample_coefficients(const Eigen::MatrixXd& covariance, Rng& rng, double d_over_r0) {
  const CoefficientSampler sampler(covariance);
  const Eigen::VectorXd a = sampler.draw(rng);
  return AberrationSample{std::vector<double>(a.data(), a.data() + a.size()), d_over_r0};
}

PsfSynthesizer::PsfSynthesizer(const ZernikeBasis& basis, int kernel_size)
    : basis_(&basis), kernel_size_(kernel_size) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw Error(ErrorCode::Domain, "kernel size must be odd and positive, got " + std::to_string(kernel_size));
  }
  const int pupil = basis.pupil_resolution();
  if (kernel_size > pupil) {
    throw Error(ErrorCode::Domain, "kernel size " + std::to_string(kernel_size) + " exceeds pupil resolution " +
                                       std::to_string(pupil));
  }
  // One pixel per lambda/D: kernel frequency bin i maps to a pupil lag of
  // i * P / M samples. Pick the coarsest period M that divides P and still
  // holds two kernel widths.
  lag_stride_ = 1;
  for (int stride = pupil; stride >= 1; --stride) {
    if (pupil % stride == 0 && pupil / stride >= 2 * kernel_size) {
      lag_stride_ = stride;
      break;
    }
  }
  period_ = pupil / lag_stride_;
  // 1.5 P keeps every used lag (|lag| <= P/2) free of wrap-around; a
  // multiple of the stride lets the PSF be folded before the second transform.
  fft_size_ = smooth_size(pupil + pupil / 2);
  while (fft_size_ % lag_stride_ != 0) fft_size_ = smooth_size(fft_size_ + 1);

  const std::vector<double> flat(basis.pupil_pixel_count(), 0.0);
  diffraction_otf_ = transfer(flat);
  for (const auto& v : diffraction_otf_) {
    if (!(v.real() > 0.0)) throw Error(ErrorCode::Internal, "aperture transfer function vanishes inside the image band");
  }
}

std::vector<std::complex<double>> PsfSynthesizer::transfer(std::span<const double> phase) const {
  const int pupil = basis_->pupil_resolution();
  const std::size_t n = static_cast<std::size_t>(fft_size_);
  std::vector<std::complex<double>> field(n * n);
  auto indices = basis_->pupil_indices();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t r = indices[k] / static_cast<std::uint32_t>(pupil);
    const std::size_t c = indices[k] % static_cast<std::uint32_t>(pupil);
    field[r * n + c] = std::polar(1.0, phase[k]);
  }
  fft::transform_2d(field, n, n, fft::Direction::Forward);

  // The OTF is only needed at lags that are multiples of the stride, which
  // is the DFT of the PSF folded onto a period of n / stride samples.
  const std::size_t q = n / static_cast<std::size_t>(lag_stride_);
  std::vector<std::complex<double>> folded(q * q);
  for (std::size_t y = 0; y < n; ++y) {
    const std::size_t fy = (y % q) * q;
    for (std::size_t x = 0; x < n; ++x) folded[fy + x % q] += std::norm(field[y * n + x]);
  }
  fft::transform_2d(folded, q, q, fft::Direction::Forward);

  const std::size_t m = static_cast<std::size_t>(period_);
  std::vector<std::complex<double>> block(m * m);
  const long qq = static_cast<long>(q);
  for (std::size_t iy = 0; iy < m; ++iy) {
    const long ly = (fft::signed_frequency(iy, m) % qq + qq) % qq;
    for (std::size_t ix = 0; ix < m; ++ix) {
      const long lx = (fft::signed_frequency(ix, m) % qq + qq) % qq;
      block[iy * m + ix] = folded[static_cast<std::size_t>(ly) * q + static_cast<std::size_t>(lx)];
    }
  }
  return block;
}

Psf PsfSynthesizer::synthesize(std::span<const double> coefficients) const {
  const std::vector<double> phase = basis_->phase(coefficients, /*exclude_tilt=*/true);
  std::vector<std::complex<double>> ratio = transfer(phase);
  for (std::size_t i = 0; i < ratio.size(); ++i) ratio[i] /= diffraction_otf_[i];

  const std::size_t m = static_cast<std::size_t>(period_);
  const int half = kernel_size_ / 2;
  auto wrap = [m](long v) { return static_cast<std::size_t>((v % static_cast<long>(m) + static_cast<long>(m)) % static_cast<long>(m)); };

  std::vector<std::complex<double>> kernel = ratio;
  fft::transform_2d(kernel, m, m, fft::Direction::Inverse);
  const double norm = 1.0 / static_cast<double>(m * m);
  for (auto& v : kernel) v *= norm;

  // Recentre on the centroid by whole pixels; a fractional shift would turn a
  // sharp kernel into a sinc.
  long shift_y = 0;
  long shift_x = 0;
  constexpr int kMaxRecentre = 4;
  for (int iter = 0; iter < kMaxRecentre; ++iter) {
    double mass = 0.0;
    double my = 0.0;
    double mx = 0.0;
    for (int y = -half; y <= half; ++y) {
      for (int x = -half; x <= half; ++x) {
        const double v = std::max(kernel[wrap(y + shift_y) * m + wrap(x + shift_x)].real(), 0.0);
        mass += v;
        my += v * y;
        mx += v * x;
      }
    }
    if (!(mass > 0.0)) break;
    const long dy = std::lround(my / mass);
    const long dx = std::lround(mx / mass);
    if (dy == 0 && dx == 0) break;
    shift_y += dy;
    shift_x += dx;
  }

  double total_signed = 0.0;
  for (const auto& v : kernel) total_signed += v.real();

  Psf psf;
  psf.size = kernel_size_;
  psf.weights.resize(static_cast<std::size_t>(kernel_size_) * kernel_size_);
  double window = 0.0;
  double window_signed = 0.0;
  for (int y = -half; y <= half; ++y) {
    for (int x = -half; x <= half; ++x) {
      const double raw = kernel[wrap(y + shift_y) * m + wrap(x + shift_x)].real();
      const double v = std::max(raw, 0.0);
      psf.weights[static_cast<std::size_t>(y + half) * kernel_size_ + (x + half)] = v;
      window += v;
      window_signed += raw;
    }
  }
  if (!(window > 0.0)) throw Error(ErrorCode::Internal, "kernel has no positive mass inside the crop");
  for (auto& w : psf.weights) w /= window;
  psf.energy_outside_crop = total_signed > 0.0 ? std::max(0.0, 1.0 - window_signed / total_signed) : 0.0;
  return psf;
}

Psf synthesize_psf(const AberrationSample& sample, const ZernikeBasis& basis, int kernel_size) {
  const PsfSynthesizer synthesizer(basis, kernel_size);
  return synthesizer.synthesize(sample.coefficients);
}

double PsfGrid::max_energy_outside_crop() const {
  double worst = 0.0;
  for (const auto& k : kernels) worst = std::max(worst, k.energy_outside_crop);
  return worst;
}

bool PsfGrid::crop_warning() const {
  return std::any_of(kernels.begin(), kernels.end(), [](const Psf& k) { return k.crop_warning(); });
}

std::vector<Eigen::VectorXd> correlated_anchor_coefficients(const CoefficientSampler& sampler, const PsfGridSpec& spec,
                                                            Rng& rng) {
  if (spec.grid_y < 2 || spec.grid_x < 2) throw Error(ErrorCode::Domain, "PSF grid must be at least 2 x 2");
  if (!(spec.correlation_length >= 0.0)) throw Error(ErrorCode::Domain, "correlation length must be >= 0");
  const int count = spec.grid_y * spec.grid_x;
  std::vector<Eigen::VectorXd> raw;
  raw.reserve(count);
  for (int a = 0; a < count; ++a) raw.push_back(sampler.draw(rng));
  if (spec.correlation_length == 0.0) return raw;

  const bool uniform = std::isinf(spec.correlation_length);
  const double inv_two_var = uniform ? 0.0 : 1.0 / (2.0 * spec.correlation_length * spec.correlation_length);
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  std::vector<double> weights(count);
  for (int a = 0; a < count; ++a) {
    const int ay = a / spec.grid_x;
    const int ax = a % spec.grid_x;
    double norm = 0.0;
    for (int b = 0; b < count; ++b) {
      const double dy = ay - b / spec.grid_x;
      const double dx = ax - b % spec.grid_x;
      weights[b] = uniform ? 1.0 : std::exp(-(dy * dy + dx * dx) * inv_two_var);
      norm += weights[b] * weights[b];
    }
    norm = std::sqrt(norm);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(sampler.mode_count());
    for (int b = 0; b < count; ++b) {
      if (weights[b] != 0.0) acc += (weights[b] / norm) * raw[b];
    }
    out.push_back(std::move(acc));
  }
  return out;
}

PsfGrid build_psf_grid(const PsfGridSpec& spec, double d_over_r0, std::size_t height, std::size_t width,
                       const PsfSynthesizer& synthesizer, Rng& rng) {
  if (height < 2 || width < 2) throw Error(ErrorCode::Domain, "image too small for a PSF grid");
  const int modes = synthesizer.basis().mode_count();
  const CoefficientSampler sampler(noll_covariance(modes, d_over_r0));

  PsfGrid grid;
  grid.grid_y = spec.grid_y;
  grid.grid_x = spec.grid_x;
  grid.coefficients = correlated_anchor_coefficients(sampler, spec, rng);
  for (int i = 0; i < spec.grid_y; ++i) grid.anchor_y.push_back(i * (height - 1.0) / (spec.grid_y - 1));
  for (int i = 0; i < spec.grid_x; ++i) grid.anchor_x.push_back(i * (width - 1.0) / (spec.grid_x - 1));

  grid.kernels.reserve(grid.coefficients.size());
  for (std::size_t a = 0; a < grid.coefficients.size(); ++a) {
    const Eigen::VectorXd& c = grid.coefficients[a];
    if (a > 0 && c == grid.coefficients[a - 1]) {
      grid.kernels.push_back(grid.kernels.back());
      continue;
    }
    grid.kernels.push_back(synthesizer.synthesize(std::span<const double>(c.data(), static_cast<std::size_t>(c.size()))));
  }
  return grid;
}

}  // namespace d2turb
