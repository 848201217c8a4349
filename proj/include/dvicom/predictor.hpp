#pragma once

#include <vector>

#include "dvicom/core.hpp"

namespace dvicom {

/// Gaussian analysis window w(q) ~ exp(-|q|^2 / (4 s_w^2)) with sum w^2 = 1.
///
/// w^2 is separable: w(q)^2 = squared_profile(q1) * squared_profile(q2),
/// with the 1-D profile summing to one.
struct AnalysisWindow {
  double spread = 0.0;
  Eigen::Index radius = 0;
  RealImage weights;                    ///< w(q), indexed (q2 + R, q1 + R)
  std::vector<double> squared_profile;  ///< 1-D factor of w^2

  /// sum_q w(q)^2 f(p + q) for every p, mirrored borders.
  RealImage windowed_sum(const RealImage& f) const;
  /// As above, evaluated only at pixels whose row and column are even.
  RealImage windowed_sum_decimated(const RealImage& f) const;
};

AnalysisWindow make_window(double s_w);

inline constexpr double kDefaultRidge = 1.0;
inline constexpr double kDefaultAlpha = 0.56;

/// Per-pixel decomposition test = predicted + residual.
struct PredictionField {
  RealImage b0, b1, b2;
  ComplexGradientField predicted;
  ComplexGradientField residual;
  double ridge = kDefaultRidge;
  double alpha = kDefaultAlpha;

  /// Residual energy sum_q w(q)^2 |residual(p + q)|^2.
  RealImage residual_energy(const AnalysisWindow& window) const;
};

/// Weighted ridge LS fit of `test` on (ref, ref1, ref2) around every pixel.
PredictionField local_ls_decompose(const ComplexGradientField& ref, const ComplexGradientField& ref1,
                                   const ComplexGradientField& ref2, const ComplexGradientField& test,
                                   const AnalysisWindow& window, double ridge = kDefaultRidge);

/// Solves on the grid decimated by two on each axis and bilinearly
/// interpolates the coefficients.
PredictionField local_ls_decompose_fast(const ComplexGradientField& ref, const ComplexGradientField& ref1,
                                        const ComplexGradientField& ref2, const ComplexGradientField& test,
                                        const AnalysisWindow& window, double ridge = kDefaultRidge);

}  // namespace dvicom
