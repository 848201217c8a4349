#include "dvicom/gradient.hpp"

#include <cmath>
#include <numbers>
#include <span>

#include "dvicom/convolution.hpp"

namespace dvicom {

namespace {

constexpr double kMinScale = 0.5;

void check_scale(double s, const char* what) {
  if (!(s >= kMinScale) || !std::isfinite(s)) {
    throw UsageError(std::string(what) + " must be >= 0.5 pixels, got " + std::to_string(s));
  }
}

}  // namespace

RealImage RealKernel::taps() const {
  const Eigen::Index n = 2 * radius + 1;
  RealImage grid = RealImage::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (axis == Axis::x1) {
      grid(radius, i) = profile[static_cast<size_t>(i)];
    } else {
      grid(i, radius) = profile[static_cast<size_t>(i)];
    }
  }
  return grid;
}

ComplexKernel make_cgg_kernel(double s) {
  check_scale(s, "gradient scale s");
  ComplexKernel k;
  k.scale = s;
  k.radius = support_radius(s);
  const Eigen::Index n = 2 * k.radius + 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = static_cast<double>(i - k.radius);
    const double g = std::exp(-x * x / (2.0 * s * s));
    k.gauss.push_back(g);
    k.ramp.push_back(x * g);
  }

  // Continuous form: exp(-r^2/2s^2) * (r/s) * e^{j arg} / (s sqrt(pi)).
  const double continuous_gain = 1.0 / (s * s * std::sqrt(std::numbers::pi));
  CompensatedSum energy;
  k.taps.resize(n, n);
  for (Eigen::Index v = 0; v < n; ++v) {
    for (Eigen::Index u = 0; u < n; ++u) {
      const auto tap = continuous_gain * std::complex<double>(k.ramp[u] * k.gauss[v], k.gauss[u] * k.ramp[v]);
      k.taps(v, u) = tap;
      energy += std::norm(tap);
    }
  }
  const double renorm = 1.0 / std::sqrt(energy.value());
  k.taps *= renorm;
  k.gain = continuous_gain * renorm;
  return k;
}

std::pair<RealKernel, RealKernel> make_hermite_kernels(double s) {
  check_scale(s, "gradient scale s");
  RealKernel h1;
  h1.scale = s;
  h1.radius = support_radius(s);
  h1.axis = Axis::x1;
  const double norm = 1.0 / (s * std::sqrt(2.0 * std::numbers::pi));
  for (Eigen::Index i = -h1.radius; i <= h1.radius; ++i) {
    const double x2s = static_cast<double>(i * i) / (s * s);
    h1.profile.push_back((2.0 * x2s - 1.0) * norm * std::exp(-0.5 * x2s));
  }
  RealKernel h2 = h1;
  h2.axis = Axis::x2;
  return {std::move(h1), std::move(h2)};
}

ComplexGradientField smoothed_gradient(const RealImage& image, const ComplexKernel& kernel) {
  if (image.rows() <= 2 * kernel.radius || image.cols() <= 2 * kernel.radius) {
    throw DataError("image is smaller than the gradient operator support");
  }
  const std::span<const double> gauss(kernel.gauss);
  const std::span<const double> ramp(kernel.ramp);
  const RealImage re = convolve_separable(image, ramp, gauss);
  const RealImage im = convolve_separable(image, gauss, ramp);
  ComplexGradientField out(image.rows(), image.cols());
  out.real() = kernel.gain * re;
  out.imag() = kernel.gain * im;
  return out;
}

ComplexGradientField smoothed_gradient(const LuminanceImage& image, const ComplexKernel& kernel) {
  return smoothed_gradient(image.data(), kernel);
}

std::pair<ComplexGradientField, ComplexGradientField> directional_components(const ComplexGradientField& field,
                                                                             const RealKernel& h1,
                                                                             const RealKernel& h2) {
  auto along = [&field](const RealKernel& h) -> ComplexGradientField {
    const std::span<const double> taps(h.profile);
    return h.axis == Axis::x1 ? convolve_x1(field, taps) : convolve_x2(field, taps);
  };
  return {along(h1), along(h2)};
}

}  // namespace dvicom
