#include "dvicom/predictor.hpp"

#include <array>
#include <cmath>
#include <span>

#include <Eigen/Cholesky>

#include "dvicom/convolution.hpp"
#include "dvicom/gradient.hpp"

namespace dvicom {

AnalysisWindow make_window(double s_w) {
  if (!(s_w >= 0.5) || !std::isfinite(s_w)) {
    throw UsageError("window spread s_w must be >= 0.5 pixels, got " + std::to_string(s_w));
  }
  AnalysisWindow w;
  w.spread = s_w;
  w.radius = support_radius(s_w);
  const Eigen::Index n = 2 * w.radius + 1;

  std::vector<double> profile;
  for (Eigen::Index i = -w.radius; i <= w.radius; ++i) {
    profile.push_back(std::exp(-static_cast<double>(i * i) / (2.0 * s_w * s_w)));
  }
  CompensatedSum total;
  for (double p : profile) total += p;
  for (double& p : profile) p /= total.value();
  w.squared_profile = profile;

  w.weights.resize(n, n);
  for (Eigen::Index v = 0; v < n; ++v) {
    for (Eigen::Index u = 0; u < n; ++u) {
      w.weights(v, u) = std::sqrt(profile[u] * profile[v]);
    }
  }
  return w;
}

RealImage AnalysisWindow::windowed_sum(const RealImage& f) const {
  const std::span<const double> taps(squared_profile);
  return convolve_separable(f, taps, taps);
}

RealImage AnalysisWindow::windowed_sum_decimated(const RealImage& f) const {
  const std::span<const double> taps(squared_profile);
  return convolve_separable(f, taps, taps, 2);
}

RealImage PredictionField::residual_energy(const AnalysisWindow& window) const {
  return window.windowed_sum(residual.abs2());
}

namespace {

void check_inputs(const ComplexGradientField& ref, const ComplexGradientField& ref1,
                  const ComplexGradientField& ref2, const ComplexGradientField& test, double ridge) {
  for (const auto* f : {&ref1, &ref2, &test}) {
    if (f->rows() != ref.rows() || f->cols() != ref.cols()) {
      throw DataError("gradient fields must share dimensions");
    }
  }
  for (const auto* f : {&ref, &ref1, &ref2, &test}) {
    const Eigen::Map<const Eigen::ArrayXd> flat(reinterpret_cast<const double*>(f->data()), 2 * f->size());
    if (!((flat - flat).sum() == 0.0)) throw DataError("non-finite gradient field");
  }
  if (!(ridge > 0.0) || !std::isfinite(ridge)) throw UsageError("ridge must be positive");
}

// Re(conj(a) * b), elementwise.
RealImage inner(const ComplexGradientField& a, const ComplexGradientField& b) {
  return a.real() * b.real() + a.imag() * b.imag();
}

// Windowed normal-equation entries: 6 Gram entries then 3 right-hand sides.
using NormalSums = std::array<RealImage, 9>;

template <typename SumFn>
NormalSums normal_sums(const ComplexGradientField& ref, const ComplexGradientField& ref1,
                       const ComplexGradientField& ref2, const ComplexGradientField& test, SumFn&& sum) {
  return {sum(ref.abs2()),       sum(inner(ref, ref1)), sum(inner(ref, ref2)),
          sum(ref1.abs2()),      sum(inner(ref1, ref2)), sum(ref2.abs2()),
          sum(inner(ref, test)), sum(inner(ref1, test)), sum(inner(ref2, test))};
}

// Solves (G + ridge I) b = rhs at every entry of the sums.
void solve_all(const NormalSums& s, double ridge, RealImage& b0, RealImage& b1, RealImage& b2) {
  const Eigen::Index rows = s[0].rows();
  const Eigen::Index cols = s[0].cols();
  b0.resize(rows, cols);
  b1.resize(rows, cols);
  b2.resize(rows, cols);
  Eigen::Matrix3d m;
  Eigen::Vector3d rhs;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m << s[0](r, c) + ridge, s[1](r, c), s[2](r, c),
           s[1](r, c), s[3](r, c) + ridge, s[4](r, c),
           s[2](r, c), s[4](r, c), s[5](r, c) + ridge;
      rhs << s[6](r, c), s[7](r, c), s[8](r, c);
      Eigen::LLT<Eigen::Matrix3d> llt(m);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("normal equations not positive definite at (" + std::to_string(r) + ", " +
                             std::to_string(c) + ")");
      }
      const Eigen::Vector3d b = llt.solve(rhs);
      b0(r, c) = b(0);
      b1(r, c) = b(1);
      b2(r, c) = b(2);
    }
  }
}

PredictionField assemble(const ComplexGradientField& ref, const ComplexGradientField& ref1,
                         const ComplexGradientField& ref2, const ComplexGradientField& test, RealImage b0,
                         RealImage b1, RealImage b2, double ridge) {
  PredictionField out;
  out.ridge = ridge;
  out.predicted = ref * b0 + ref1 * b1 + ref2 * b2;
  out.residual = test - out.predicted;
  out.b0 = std::move(b0);
  out.b1 = std::move(b1);
  out.b2 = std::move(b2);
  return out;
}

// Bilinear upsampling of a grid sampled at even rows/columns; samples past
// the last grid node are held constant.
RealImage upsample2(const RealImage& coarse, Eigen::Index rows, Eigen::Index cols) {
  const Eigen::Index last_c = coarse.cols() - 1;
  RealImage wide(coarse.rows(), cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const Eigen::Index c0 = c / 2;
    if (c % 2 == 0 || c0 == last_c) {
      wide.col(c) = coarse.col(c0);
    } else {
      wide.col(c) = 0.5 * (coarse.col(c0) + coarse.col(c0 + 1));
    }
  }
  const Eigen::Index last_r = coarse.rows() - 1;
  RealImage out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index r0 = r / 2;
    if (r % 2 == 0 || r0 == last_r) {
      out.row(r) = wide.row(r0);
    } else {
      out.row(r) = 0.5 * (wide.row(r0) + wide.row(r0 + 1));
    }
  }
  return out;
}

}  // namespace

PredictionField local_ls_decompose(const ComplexGradientField& ref, const ComplexGradientField& ref1,
                                   const ComplexGradientField& ref2, const ComplexGradientField& test,
                                   const AnalysisWindow& window, double ridge) {
  check_inputs(ref, ref1, ref2, test, ridge);
  const auto sums =
      normal_sums(ref, ref1, ref2, test, [&window](const RealImage& f) { return window.windowed_sum(f); });
  RealImage b0, b1, b2;
  solve_all(sums, ridge, b0, b1, b2);
  return assemble(ref, ref1, ref2, test, std::move(b0), std::move(b1), std::move(b2), ridge);
}

PredictionField local_ls_decompose_fast(const ComplexGradientField& ref, const ComplexGradientField& ref1,
                                        const ComplexGradientField& ref2, const ComplexGradientField& test,
                                        const AnalysisWindow& window, double ridge) {
  check_inputs(ref, ref1, ref2, test, ridge);
  const auto sums = normal_sums(ref, ref1, ref2, test,
                                [&window](const RealImage& f) { return window.windowed_sum_decimated(f); });
  RealImage c0, c1, c2;
  solve_all(sums, ridge, c0, c1, c2);
  const Eigen::Index rows = ref.rows();
  const Eigen::Index cols = ref.cols();
  return assemble(ref, ref1, ref2, test, upsample2(c0, rows, cols), upsample2(c1, rows, cols),
                  upsample2(c2, rows, cols), ridge);
}

}  // namespace dvicom
