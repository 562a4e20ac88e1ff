#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/zernike.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace d2turb;
using d2turb::testing::error_code_of;
using d2turb::testing::zernike_variance_oracle;

namespace {

constexpr double kPi = std::numbers::pi;

// Brute-force Noll enumeration: sort (n, |m|) pairs by n then |m|, and give
// each m != 0 pair two consecutive indices whose parity selects cos (even j)
// or sin (odd j).
ZernikeIndex noll_oracle(int j) {
  int count = 0;
  for (int n = 0;; ++n) {
    for (int m = n % 2; m <= n; m += 2) {
      if (m == 0) {
        if (++count == j) return {n, 0};
      } else {
        for (int k = 0; k < 2; ++k) {
          if (++count == j) return {n, count % 2 == 0 ? m : -m};
        }
      }
    }
  }
}

double kernel_second_moment(const Psf& k) {
  const int c = k.size / 2;
  double s = 0.0;
  for (int y = 0; y < k.size; ++y) {
    for (int x = 0; x < k.size; ++x) s += k.at(y, x) * ((y - c) * (y - c) + (x - c) * (x - c));
  }
  return s;
}

const ZernikeBasis& shared_basis() {
  static const ZernikeBasis basis = ZernikeBasis::build(36, 256);
  return basis;
}

}  // namespace

TEST_CASE("Noll index ordering matches brute-force enumeration") {
  CHECK(noll_to_nm(1) == ZernikeIndex{0, 0});
  CHECK(noll_to_nm(2) == ZernikeIndex{1, 1});
  CHECK(noll_to_nm(3) == ZernikeIndex{1, -1});
  CHECK(noll_to_nm(4) == ZernikeIndex{2, 0});
  CHECK(noll_to_nm(11) == ZernikeIndex{4, 0});
  for (int j = 1; j <= 300; ++j) {
    CAPTURE(j);
    CHECK(noll_to_nm(j) == noll_oracle(j));
  }
  CHECK(error_code_of([] { noll_to_nm(0); }) == ErrorCode::Domain);
}

TEST_CASE("Zernike values") {
  CHECK(zernike_value(2, 0.0, 0.0) == 0.0);
  CHECK(zernike_value(1, 0.3, 0.2) == 1.0);
  // Noll normalisation: Z4 = sqrt(3) (2 r^2 - 1), Z2 = 2 r cos
  CHECK(zernike_value(4, 0.6, 0.0) == doctest::Approx(std::sqrt(3.0) * (2 * 0.36 - 1)).epsilon(1e-12));
  CHECK(zernike_value(2, 0.5, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(zernike_value(3, 0.0, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(zernike_value(5, 1.2, 0.0) == 0.0);
}

TEST_CASE("discrete basis is orthonormal on the pupil") {
  const ZernikeBasis& b = shared_basis();
  CHECK(b.mode_count() == 36);
  const double area = b.pixel_area();
  for (int i = 1; i <= 15; ++i) {
    for (int j = i; j <= 15; ++j) {
      auto zi = b.mode(i);
      auto zj = b.mode(j);
      double s = 0.0;
      for (std::size_t p = 0; p < zi.size(); ++p) s += zi[p] * zj[p];
      s *= area / kPi;
      CAPTURE(i);
      CAPTURE(j);
      CHECK(std::abs(s - (i == j ? 1.0 : 0.0)) < 1e-2);
    }
  }
  // Independent high-resolution check of the analytic normalisation.
  const int p = 2048;
  double s4 = 0.0;
  double s11 = 0.0;
  for (int y = 0; y < p; ++y) {
    const double yy = (y + 0.5) * 2.0 / p - 1.0;
    for (int x = 0; x < p; ++x) {
      const double xx = (x + 0.5) * 2.0 / p - 1.0;
      const double a = zernike_value(4, xx, yy);
      const double c = zernike_value(11, xx, yy);
      s4 += a * a;
      s11 += c * c;
    }
  }
  const double scale = 4.0 / (static_cast<double>(p) * p) / kPi;
  CHECK(s4 * scale == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(s11 * scale == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("covariance scales as (D/r0)^(5/3)") {
  const Eigen::MatrixXd c1 = noll_covariance(36, 1.0);
  const Eigen::MatrixXd c2 = noll_covariance(36, 2.0);
  CHECK(c2(1, 1) / c1(1, 1) == doctest::Approx(std::pow(2.0, 5.0 / 3.0)).epsilon(1e-12));
  CHECK((c2 - c1 * std::pow(2.0, 5.0 / 3.0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(noll_covariance(36, 0.0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(c1(0, 0) == 0.0);
  CHECK((c1 - c1.transpose()).cwiseAbs().maxCoeff() == 0.0);
  // tilt modes are uncorrelated with each other, tilt correlates with coma
  CHECK(c1(1, 2) == 0.0);
  CHECK(c1(1, 7) != 0.0);
  CHECK(error_code_of([] { noll_covariance(36, -1.0); }) == ErrorCode::Domain);
}

TEST_CASE("covariance diagonal matches the spectral integral oracle") {
  const Eigen::MatrixXd c = noll_covariance(11, 1.0);
  const double tilt = zernike_variance_oracle(1, 1.0);
  const double defocus = zernike_variance_oracle(2, 1.0);
  const double spherical = zernike_variance_oracle(4, 1.0);
  MESSAGE("oracle Var(a2) = " << tilt << ", closed form " << c(1, 1));
  CHECK(tilt == doctest::Approx(0.448888).epsilon(5e-3));
  CHECK(std::abs(c(1, 1) / tilt - 1.0) < 1e-4);
  CHECK(std::abs(c(2, 2) / tilt - 1.0) < 1e-4);
  CHECK(std::abs(c(3, 3) / defocus - 1.0) < 1e-4);
  CHECK(std::abs(c(10, 10) / spherical - 1.0) < 1e-4);
}

TEST_CASE("sampled coefficients have the target mean and covariance") {
  const Eigen::MatrixXd cov = noll_covariance(10, 2.0);
  const CoefficientSampler sampler(cov);
  Rng rng(42);
  const int draws = 100000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(10);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(10, 10);
  for (int i = 0; i < draws; ++i) {
    const Eigen::VectorXd a = sampler.draw(rng);
    mean += a;
    second += a * a.transpose();
  }
  mean /= draws;
  second /= draws;
  for (int j = 1; j < 10; ++j) {
    const double sd = std::sqrt(cov(j, j));
    CHECK(std::abs(mean(j)) < 5.0 * sd / std::sqrt(draws));
    CHECK(second(j, j) == doctest::Approx(cov(j, j)).epsilon(0.03));
  }
  // tilt/coma cross term
  CHECK(second(1, 7) == doctest::Approx(cov(1, 7)).epsilon(0.1));
  CHECK(std::abs(mean(0)) == 0.0);
}

TEST_CASE("variance regresses to slope 5/3 against D/r0") {
  std::vector<double> lx;
  std::vector<double> ly;
  for (double d : {1.0, 2.0, 4.0, 8.0}) {
    const CoefficientSampler sampler(noll_covariance(4, d));
    Rng rng(7 + static_cast<std::uint64_t>(d));
    double s = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double a = sampler.draw(rng)(3);
      s += a * a;
    }
    lx.push_back(std::log(d));
    ly.push_back(std::log(s / 10000));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / 4, my += ly[i] / 4;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  CHECK(sxy / sxx == doctest::Approx(5.0 / 3.0).epsilon(0.03));
}

TEST_CASE("zero aberration gives a symmetric identity kernel") {
  const PsfSynthesizer synth(shared_basis(), 33);
  const std::vector<double> zero(36, 0.0);
  const Psf k = synth.synthesize(zero);
  REQUIRE(k.size == 33);
  double peak = 0.0;
  double sum = 0.0;
  double cy = 0.0;
  double cx = 0.0;
  for (int y = 0; y < 33; ++y) {
    for (int x = 0; x < 33; ++x) {
      peak = std::max(peak, k.at(y, x));
      sum += k.at(y, x);
      cy += k.at(y, x) * (y - 16);
      cx += k.at(y, x) * (x - 16);
    }
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(cy) < 0.01);
  CHECK(std::abs(cx) < 0.01);
  double asym = 0.0;
  for (int y = 0; y < 33; ++y) {
    for (int x = 0; x < 33; ++x) {
      const double v = k.at(y, x);
      for (double w : {k.at(x, y), k.at(32 - y, x), k.at(y, 32 - x), k.at(32 - y, 32 - x), k.at(32 - x, 32 - y)}) {
        asym = std::max(asym, std::abs(v - w));
      }
    }
  }
  CHECK(asym / peak < 1e-3);
  CHECK(k.energy_outside_crop < 1e-9);
}

TEST_CASE("sampled kernels are non-negative with unit sum") {
  const PsfSynthesizer synth(shared_basis(), 33);
  Rng rng(1234);
  for (double d : {0.5, 2.0, 5.5}) {
    const CoefficientSampler sampler(noll_covariance(36, d));
    for (int i = 0; i < 20; ++i) {
      const Eigen::VectorXd a = sampler.draw(rng);
      const Psf k = synth.synthesize(std::span<const double>(a.data(), a.size()));
      double sum = 0.0;
      double lo = 1.0;
      for (double w : k.weights) sum += w, lo = std::min(lo, w);
      CHECK(lo >= 0.0);
      CHECK(std::abs(sum - 1.0) < 1e-6);
      CHECK(std::isfinite(k.energy_outside_crop));
    }
  }
}

TEST_CASE("flipping the sign of even-order modes leaves the kernel unchanged") {
  const ZernikeBasis& basis = shared_basis();
  const PsfSynthesizer synth(basis, 33);
  Rng rng(99);
  const Eigen::VectorXd a = CoefficientSampler(noll_covariance(36, 3.0)).draw(rng);
  std::vector<double> c(a.data(), a.data() + a.size());
  std::vector<double> flipped = c;
  for (int j = 1; j <= 36; ++j) {
    if (noll_to_nm(j).n % 2 == 0) flipped[j - 1] = -flipped[j - 1];
  }
  const Psf k1 = synth.synthesize(c);
  const Psf k2 = synth.synthesize(flipped);
  double diff = 0.0;
  for (std::size_t i = 0; i < k1.weights.size(); ++i) diff = std::max(diff, std::abs(k1.weights[i] - k2.weights[i]));
  CHECK(diff < 1e-9);
}

TEST_CASE("defocus spreads the kernel and tilt is ignored") {
  const PsfSynthesizer synth(shared_basis(), 33);
  std::vector<double> c(36, 0.0);
  const double base = kernel_second_moment(synth.synthesize(c));
  c[3] = 1.0;
  const double m1 = kernel_second_moment(synth.synthesize(c));
  c[3] = 2.0;
  const double m2 = kernel_second_moment(synth.synthesize(c));
  CHECK(m1 > base);
  CHECK(m2 > m1);

  std::vector<double> tilted(36, 0.0);
  tilted[1] = 3.0;
  tilted[2] = -2.0;
  const Psf t = synth.synthesize(tilted);
  const Psf z = synth.synthesize(std::vector<double>(36, 0.0));
  CHECK(t.weights == z.weights);
}

TEST_CASE("PSF grid anchors") {
  const PsfSynthesizer synth(shared_basis(), 33);
  SUBCASE("zero D/r0 gives identity kernels everywhere") {
    Rng rng(5);
    const PsfGrid g = build_psf_grid(PsfGridSpec{4, 4, 1.0}, 0.0, 64, 80, synth, rng);
    REQUIRE(g.kernels.size() == 16);
    for (const Psf& k : g.kernels) CHECK(k.weights == g.kernels[0].weights);
    CHECK(g.anchor_y.front() == 0.0);
    CHECK(g.anchor_y.back() == 63.0);
    CHECK(g.anchor_x.back() == 79.0);
    CHECK(g.max_energy_outside_crop() < 1e-9);
  }
  SUBCASE("infinite correlation gives identical anchors") {
    Rng rng(6);
    const PsfGrid g = build_psf_grid(PsfGridSpec{3, 3, INFINITY}, 2.0, 64, 64, synth, rng);
    for (const auto& c : g.coefficients) CHECK((c - g.coefficients[0]).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("degenerate image size") {
    Rng rng(6);
    CHECK(error_code_of([&] { build_psf_grid(PsfGridSpec{}, 1.0, 1, 64, synth, rng); }) == ErrorCode::Domain);
  }
}

TEST_CASE("anchor correlation follows the correlation length") {
  const CoefficientSampler sampler(noll_covariance(6, 1.0));
  auto neighbour_corr = [&](double length) {
    Rng rng(77);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int t = 0; t < 4000; ++t) {
      const auto c = correlated_anchor_coefficients(sampler, PsfGridSpec{4, 4, length}, rng);
      const double a = c[5](3);
      const double b = c[6](3);
      sxy += a * b, sxx += a * a, syy += b * b;
    }
    // marginal variance is preserved
    CHECK(sxx / 4000 == doctest::Approx(sampler.factor().row(3).squaredNorm()).epsilon(0.08));
    return sxy / std::sqrt(sxx * syy);
  };
  CHECK(std::abs(neighbour_corr(0.0)) < 0.1);
  const double c1 = neighbour_corr(1.0);
  const double c3 = neighbour_corr(3.0);
  CHECK(c1 > 0.3);
  CHECK(c3 > c1);
}
