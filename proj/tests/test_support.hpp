#pragma once

// Fixtures, degradations and brute-force oracles shared by the test binaries.
// The oracles deliberately avoid the library's convolution and solver code.

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dvicom/core.hpp"
#include "dvicom/image_io.hpp"
#include "dvicom/predictor.hpp"

namespace dvicom::testkit {

inline std::filesystem::path data_dir() { return DVICOM_TEST_DATA; }

inline Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -1 - i;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

inline LuminanceImage quantized(const RealImage& v) { return LuminanceImage(v.round().max(0.0).min(255.0)); }

inline LuminanceImage camera() { return load_luminance(data_dir() / "camera256.png"); }

inline LuminanceImage astronaut() { return load_luminance(data_dir() / "astronaut128_rgb.png"); }

/// Concentric-ring chirp.
inline LuminanceImage zone_plate(Eigen::Index n = 96) {
  RealImage v(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const double x = c - n / 2.0, y = r - n / 2.0;
      v(r, c) = 127.5 + 100.0 * std::cos(std::numbers::pi * (x * x + y * y) / (4.0 * n));
    }
  }
  return quantized(v);
}

/// Checkerboard with a bright disc.
inline LuminanceImage checker_disc(Eigen::Index n = 80) {
  RealImage v(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      double value = ((r / 10 + c / 10) % 2) ? 170.0 : 60.0;
      if (std::hypot(r - 0.45 * n, c - 0.55 * n) < 0.22 * n) value = 235.0;
      v(r, c) = value;
    }
  }
  return quantized(v);
}

/// Seeded noise smoothed by a small box filter: a texture with broadband detail.
inline LuminanceImage texture(Eigen::Index rows = 64, Eigen::Index cols = 72, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  RealImage raw(rows, cols);
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = u(rng);
  RealImage v(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) s += raw(reflect(r + dr, rows), reflect(c + dc, cols));
      v(r, c) = s / 9.0;
    }
  }
  return quantized(v);
}

/// Gaussian blur (direct 2-D sum, mirrored borders), then 8-bit rounding.
inline LuminanceImage gaussian_blur(const LuminanceImage& img, double sigma) {
  const auto R = static_cast<Eigen::Index>(std::ceil(4.0 * sigma));
  std::vector<double> k(2 * R + 1);
  double total = 0.0;
  for (Eigen::Index i = -R; i <= R; ++i) total += k[i + R] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& t : k) t /= total;
  const RealImage& in = img.data();
  RealImage tmp(in.rows(), in.cols()), out(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r)
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
      double s = 0.0;
      for (Eigen::Index i = -R; i <= R; ++i) s += k[i + R] * in(r, reflect(c - i, in.cols()));
      tmp(r, c) = s;
    }
  for (Eigen::Index r = 0; r < in.rows(); ++r)
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
      double s = 0.0;
      for (Eigen::Index i = -R; i <= R; ++i) s += k[i + R] * tmp(reflect(r - i, in.rows()), c);
      out(r, c) = s;
    }
  return quantized(out);
}

/// Additive white Gaussian noise, then 8-bit rounding and clamping.
inline LuminanceImage add_noise(const LuminanceImage& img, double sigma, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  RealImage v = img.data();
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] += n(rng);
  return quantized(v);
}

inline ComplexImage random_field(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  ComplexImage f(rows, cols);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = {n(rng), n(rng)};
  return f;
}

/// out(p) = sum_q in(p - q) k(q), k indexed (q2 + R, q1 + R), mirrored borders.
template <typename In, typename K>
ComplexImage direct_convolve(const In& in, const K& k) {
  const Eigen::Index R = k.rows() / 2;
  ComplexImage out(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r)
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
      std::complex<double> s = 0.0;
      for (Eigen::Index v = -R; v <= R; ++v)
        for (Eigen::Index u = -R; u <= R; ++u)
          s += std::complex<double>(in(reflect(r - v, in.rows()), reflect(c - u, in.cols()))) * k(v + R, u + R);
      out(r, c) = s;
    }
  return out;
}

/// sum_q w(q)^2 f(p + q) at one pixel.
inline double brute_window_sum(const RealImage& f, const AnalysisWindow& w, Eigen::Index r, Eigen::Index c) {
  const Eigen::Index R = w.radius;
  double s = 0.0;
  for (Eigen::Index v = -R; v <= R; ++v)
    for (Eigen::Index u = -R; u <= R; ++u)
      s += w.weights(v + R, u + R) * w.weights(v + R, u + R) * f(reflect(r + v, f.rows()), reflect(c + u, f.cols()));
  return s;
}

/// Stacked weighted real system with ridge rows, solved by Householder QR.
inline Eigen::Vector3d brute_solve(const ComplexImage& x0, const ComplexImage& x1, const ComplexImage& x2,
                                   const ComplexImage& y, const AnalysisWindow& w, double ridge, Eigen::Index r,
                                   Eigen::Index c) {
  const Eigen::Index R = w.radius, side = 2 * R + 1;
  Eigen::MatrixXd A(2 * side * side + 3, 3);
  Eigen::VectorXd b(2 * side * side + 3);
  Eigen::Index row = 0;
  const ComplexImage* xs[3] = {&x0, &x1, &x2};
  for (Eigen::Index v = -R; v <= R; ++v)
    for (Eigen::Index u = -R; u <= R; ++u) {
      const double wq = w.weights(v + R, u + R);
      const Eigen::Index rr = reflect(r + v, y.rows()), cc = reflect(c + u, y.cols());
      for (int k = 0; k < 3; ++k) {
        A(row, k) = wq * (*xs[k])(rr, cc).real();
        A(row + 1, k) = wq * (*xs[k])(rr, cc).imag();
      }
      b(row) = wq * y(rr, cc).real();
      b(row + 1) = wq * y(rr, cc).imag();
      row += 2;
    }
  A.bottomRows(3) = std::sqrt(ridge) * Eigen::Matrix3d::Identity();
  b.tail(3).setZero();
  return A.householderQr().solve(b);
}

/// Windowed real Gram matrix of the three regressors at one pixel.
inline Eigen::Matrix3d brute_gram(const ComplexImage& x0, const ComplexImage& x1, const ComplexImage& x2,
                                  const AnalysisWindow& w, Eigen::Index r, Eigen::Index c) {
  const Eigen::Index R = w.radius;
  const ComplexImage* xs[3] = {&x0, &x1, &x2};
  Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
  for (Eigen::Index v = -R; v <= R; ++v)
    for (Eigen::Index u = -R; u <= R; ++u) {
      const double w2 = w.weights(v + R, u + R) * w.weights(v + R, u + R);
      const Eigen::Index rr = reflect(r + v, x0.rows()), cc = reflect(c + u, x0.cols());
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) g(i, k) += w2 * (std::conj((*xs[i])(rr, cc)) * (*xs[k])(rr, cc)).real();
    }
  return g;
}

inline double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// O(n^2) average rank: 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> naive_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) less += v < x[i], equal += v == x[i];
    r[i] = 1 + less + (equal - 1) / 2;
  }
  return r;
}

inline double brute_loocv(const Eigen::MatrixXd& X, const std::vector<double>& y) {
  const Eigen::Index n = X.rows();
  double press = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXd Xi(n - 1, X.cols());
    Eigen::VectorXd yi(n - 1);
    for (Eigen::Index k = 0, row = 0; k < n; ++k) {
      if (k == i) continue;
      Xi.row(row) = X.row(k);
      yi(row++) = y[k];
    }
    const Eigen::VectorXd beta = Xi.colPivHouseholderQr().solve(yi);
    press += std::pow(y[i] - X.row(i).dot(beta), 2);
  }
  return std::sqrt(press / double(n));
}

}  // namespace dvicom::testkit
