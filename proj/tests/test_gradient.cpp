#include <gtest/gtest.h>

#include <numbers>

#include "dvicom/gradient.hpp"
#include "test_support.hpp"

using namespace dvicom;
using dvicom::testkit::direct_convolve;

namespace {

// Continuous formula sampled on the lattice, normalized independently.
ComplexImage reference_cgg_taps(double s) {
  const auto R = static_cast<Eigen::Index>(std::ceil(4.0 * s));
  ComplexImage k(2 * R + 1, 2 * R + 1);
  double energy = 0.0;
  for (Eigen::Index x2 = -R; x2 <= R; ++x2)
    for (Eigen::Index x1 = -R; x1 <= R; ++x1) {
      const double r2 = double(x1 * x1 + x2 * x2);
      const auto v = std::exp(-r2 / (2 * s * s)) / (s * s * std::sqrt(std::numbers::pi)) *
                     std::complex<double>(double(x1), double(x2));
      k(x2 + R, x1 + R) = v;
      energy += std::norm(v);
    }
  return k / std::sqrt(energy);
}

double max_abs_diff(const ComplexImage& a, const ComplexImage& b) { return (a - b).abs().maxCoeff(); }

}  // namespace

TEST(CggKernel, Examples) {
  const auto k = make_cgg_kernel(1.0);
  EXPECT_EQ(k.radius, 4);
  EXPECT_EQ(k.at(0, 0), std::complex<double>(0.0, 0.0));
  EXPECT_GT(k.at(1, 0).real(), 0.0);
  EXPECT_NEAR(k.at(1, 0).imag(), 0.0, 1e-15);
  EXPECT_GT(k.at(0, 1).imag(), 0.0);
}

TEST(CggKernel, MatchesFormulaAndHasUnitEnergy) {
  for (double s : {0.5, 1.0, 2.0, 4.0}) {
    const auto k = make_cgg_kernel(s);
    EXPECT_NEAR(k.taps.abs2().sum(), 1.0, 1e-9) << "s=" << s;
    EXPECT_LT(max_abs_diff(k.taps, reference_cgg_taps(s)), 1e-12) << "s=" << s;
  }
}

TEST(CggKernel, PointReflectionFlipsSign) {
  const auto k = make_cgg_kernel(1.5);
  for (Eigen::Index x2 = -k.radius; x2 <= k.radius; ++x2)
    for (Eigen::Index x1 = -k.radius; x1 <= k.radius; ++x1)
      EXPECT_EQ(k.at(-x1, -x2), -k.at(x1, x2));
}

TEST(CggKernel, RejectsSmallScale) {
  EXPECT_THROW(make_cgg_kernel(0.49), UsageError);
  EXPECT_THROW(make_hermite_kernels(0.3), UsageError);
}

TEST(HermiteKernels, Examples) {
  const auto [h1, h2] = make_hermite_kernels(1.0);
  const Eigen::Index R = h1.radius;
  EXPECT_NEAR(h1.profile[R], -0.3989422804014327, 1e-12);
  EXPECT_NEAR(h1.profile[R + 1], 0.24197072451914337, 1e-12);
  EXPECT_NEAR(h1.profile[R - 1], 0.24197072451914337, 1e-12);
  const RealImage t1 = h1.taps(), t2 = h2.taps();
  EXPECT_TRUE((t2 == t1.transpose()).all());
  // h1 acts along x1 only: all its taps sit on the x2 = 0 row.
  EXPECT_EQ(t1.abs().sum(), t1.row(R).abs().sum());
}

TEST(HermiteKernels, TapSumMatchesDiscreteFormula) {
  // (2x^2/s^2 - 1) g(x) / (s sqrt(2 pi)) integrates to 1, not 0, so the
  // lattice sum sits near 1.
  for (double s : {1.0, 2.0, 3.0}) {
    const auto [h1, h2] = make_hermite_kernels(s);
    double expected = 0.0;
    const Eigen::Index R = h1.radius;
    for (Eigen::Index x = -R; x <= R; ++x)
      expected += (2.0 * x * x / (s * s) - 1.0) / (s * std::sqrt(2 * std::numbers::pi)) *
                  std::exp(-0.5 * x * x / (s * s));
    double sum = 0.0;
    for (double t : h1.profile) sum += t;
    EXPECT_NEAR(sum, expected, 1e-12);
    EXPECT_NEAR(sum, 1.0, 2e-3);
  }
}

TEST(SmoothedGradient, ConstantImageGivesZero) {
  const auto g = smoothed_gradient(LuminanceImage(RealImage::Constant(32, 40, 128.0)), make_cgg_kernel(1.0));
  EXPECT_EQ(g.rows(), 32);
  EXPECT_EQ(g.cols(), 40);
  EXPECT_LT(g.abs().maxCoeff(), 1e-12);
}

TEST(SmoothedGradient, MatchesDirectConvolution) {
  const auto img = testkit::texture(40, 44, 3);
  for (double s : {0.5, 1.0, 2.0}) {
    const auto k = make_cgg_kernel(s);
    EXPECT_LT(max_abs_diff(smoothed_gradient(img, k), direct_convolve(img.data(), k.taps)), 1e-9) << "s=" << s;
  }
}

TEST(SmoothedGradient, StepEdgePhase) {
  const Eigen::Index n = 48, c0 = 24;
  RealImage rising(n, n), falling(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      rising(r, c) = c < c0 ? 40.0 : 200.0;
      falling(r, c) = 240.0 - rising(r, c);
    }
  const auto k = make_cgg_kernel(1.0);
  for (const auto& [img, phase] : {std::pair{rising, std::numbers::pi}, std::pair{falling, 0.0}}) {
    const auto g = smoothed_gradient(img, k);
    const auto oracle = direct_convolve(img, k.taps);
    const Eigen::Index r = n / 2;
    Eigen::Index best = 0;
    g.row(r).abs().maxCoeff(&best);
    EXPECT_TRUE(best == c0 - 1 || best == c0);
    for (Eigen::Index c = c0 - 2; c <= c0 + 1; ++c) {
      EXPECT_LT(std::abs(g(r, c) - oracle(r, c)), 1e-9);
      EXPECT_NEAR(std::abs(std::remainder(std::arg(g(r, c)) - phase, 2 * std::numbers::pi)), 0.0, 1e-9);
    }
    EXPECT_LT(std::abs(g(r, 4)), 1e-3 * std::abs(g(r, c0)));
  }
}

TEST(SmoothedGradient, QuarterTurnSteerability) {
  const Eigen::Index n = 64;
  const auto img = testkit::texture(n, n, 11).data();
  RealImage rotated(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) rotated(r, c) = img(n - 1 - c, r);
  const auto k = make_cgg_kernel(1.0);
  const auto y = smoothed_gradient(img, k), yr = smoothed_gradient(rotated, k);
  const std::complex<double> j(0.0, 1.0);
  double worst = 0.0;
  for (Eigen::Index r = 8; r < n - 8; ++r)
    for (Eigen::Index c = 8; c < n - 8; ++c) worst = std::max(worst, std::abs(yr(r, c) - j * y(n - 1 - c, r)));
  EXPECT_LT(worst, 1e-9);
}

TEST(SmoothedGradient, Linearity) {
  const auto a = testkit::texture(48, 48, 1).data(), b = testkit::texture(48, 48, 2).data();
  const auto k = make_cgg_kernel(1.3);
  const double alpha = 0.3, beta = 0.6;
  const auto lhs = smoothed_gradient(RealImage(alpha * a + beta * b), k);
  const auto rhs = alpha * smoothed_gradient(a, k) + beta * smoothed_gradient(b, k);
  EXPECT_LT(max_abs_diff(lhs, rhs), 1e-9);
}

TEST(SmoothedGradient, RejectsImageSmallerThanSupport) {
  EXPECT_THROW(smoothed_gradient(RealImage::Zero(16, 16), make_cgg_kernel(2.0)), DataError);
}

TEST(DirectionalComponents, Examples) {
  const auto [h1, h2] = make_hermite_kernels(1.0);
  const auto [z1, z2] = directional_components(ComplexImage::Zero(20, 20), h1, h2);
  EXPECT_EQ(z1.abs().maxCoeff(), 0.0);
  EXPECT_EQ(z2.abs().maxCoeff(), 0.0);

  const std::complex<double> c(2.0, -3.0);
  const auto [c1, c2] = directional_components(ComplexImage::Constant(24, 24, c), h1, h2);
  double tap_sum = 0.0;
  for (double t : h1.profile) tap_sum += t;
  EXPECT_LT(std::abs(c1(12, 12) - c * tap_sum), 1e-12);
  EXPECT_LT(std::abs(c2(12, 12) - c * tap_sum), 1e-12);
}

TEST(DirectionalComponents, MatchesDirectConvolution) {
  const auto field = testkit::random_field(32, 32, 5, 10.0);
  for (double s : {1.0, 1.5}) {
    const auto [h1, h2] = make_hermite_kernels(s);
    const auto [y1, y2] = directional_components(field, h1, h2);
    EXPECT_LT(max_abs_diff(y1, direct_convolve(field, h1.taps())), 1e-10);
    EXPECT_LT(max_abs_diff(y2, direct_convolve(field, h2.taps())), 1e-10);
  }
}
