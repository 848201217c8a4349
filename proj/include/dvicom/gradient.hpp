#pragma once

#include <utility>
#include <vector>

#include "dvicom/core.hpp"
#include "dvicom/image_io.hpp"

namespace dvicom {

/// Complex Gaussian gradient operator of scale s, unit discrete energy.
///
/// The operator factors as gain * (x1 + j x2) * g(x1) * g(x2) with
/// g(x) = exp(-x^2 / (2 s^2)), so it is applied as two separable passes;
/// `taps` holds the full 2-D grid for inspection, indexed (x2 + R, x1 + R).
struct ComplexKernel {
  double scale = 0.0;
  Eigen::Index radius = 0;
  double gain = 0.0;
  std::vector<double> gauss;  ///< g(x), x = -R..R
  std::vector<double> ramp;   ///< x * g(x)
  ComplexImage taps;

  std::complex<double> at(Eigen::Index x1, Eigen::Index x2) const { return taps(x2 + radius, x1 + radius); }
};

enum class Axis { x1, x2 };

/// Second-order Hermite-Gauss profile along one axis; a 1-D operator with
/// no extent across the other axis.
struct RealKernel {
  double scale = 0.0;
  Eigen::Index radius = 0;
  Axis axis = Axis::x1;
  std::vector<double> profile;  ///< h(x), x = -R..R along `axis`

  /// Embedding as a (2R+1)x(2R+1) grid indexed (x2 + R, x1 + R).
  RealImage taps() const;
};

inline Eigen::Index support_radius(double scale) { return static_cast<Eigen::Index>(std::ceil(4.0 * scale)); }

ComplexKernel make_cgg_kernel(double s);

/// Returns (h1 along x1, h2 along x2).
std::pair<RealKernel, RealKernel> make_hermite_kernels(double s);

/// Same-size convolution of the image with the complex operator.
ComplexGradientField smoothed_gradient(const LuminanceImage& image, const ComplexKernel& kernel);
ComplexGradientField smoothed_gradient(const RealImage& image, const ComplexKernel& kernel);

/// Convolves a gradient field with h1 and h2, returning (y1, y2).
std::pair<ComplexGradientField, ComplexGradientField> directional_components(const ComplexGradientField& field,
                                                                             const RealKernel& h1,
                                                                             const RealKernel& h2);

}  // namespace dvicom
