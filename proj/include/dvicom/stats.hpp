#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dvicom/core.hpp"

namespace dvicom {

/// Goodness-of-fit summary for a DMOS predictor.
struct FitReport {
  double rmse = 0.0;
  double lcc = 0.0;
  double srocc = 0.0;
  double aic = 0.0;
  /// Leave-one-out RMSE; NaN for non-linear fits.
  double loocv_rmse = std::numeric_limits<double>::quiet_NaN();
  double kurtosis = 0.0;
  double p95 = 0.0;
  std::size_t n = 0;
  std::size_t p = 0;
};

double rmse(std::span<const double> pred, std::span<const double> obs);

/// Pearson linear correlation.
double lcc(std::span<const double> x, std::span<const double> y);

/// Average (fractional) ranks, 1-based.
std::vector<double> fractional_ranks(std::span<const double> x);

/// Spearman rank-order correlation with average ranks for ties.
double srocc(std::span<const double> x, std::span<const double> y);

/// AIC = 2 n ln(rmse) + 2 (p + 1).
double aic(std::size_t n, double rmse, std::size_t p);

/// Raw weights exp(-0.5 (AIC_k - min AIC)).
std::vector<double> aic_weights(std::span<const double> aics);

/// Diagonal of the hat matrix X (X^T X)^-1 X^T.
Eigen::VectorXd hat_diagonal(const Eigen::MatrixXd& design);

/// sqrt(PRESS / N) of the ordinary LS fit of `obs` on `design`.
double loocv_rmse(const Eigen::MatrixXd& design, std::span<const double> obs);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// CDF of the F distribution with (d1, d2) degrees of freedom.
double f_cdf(double x, double d1, double d2);

/// One-sided critical variance ratio at significance `alpha` for two
/// samples of sizes n1 and n2 (n - 1 degrees of freedom each).
double f_test_threshold(std::size_t n1, std::size_t n2, double alpha);

/// Non-excess kurtosis (normal = 3).
double kurtosis(std::span<const double> x);

/// 95th percentile by linear interpolation between order statistics.
double percentile95(std::span<const double> x);

/// Fills every FitReport field except loocv_rmse.
FitReport make_report(std::span<const double> pred, std::span<const double> obs, std::size_t p);

/// beta1 (1/2 - 1/(1 + exp(beta2 (x - beta3)))) + beta4 x + beta5.
using Logistic5 = std::array<double, 5>;

double logistic5(const Logistic5& beta, double x);

struct Logistic5Fit {
  Logistic5 beta{};
  double sse = 0.0;
  std::vector<double> sse_trace;  ///< start SSE, then one entry per accepted step
  FitReport report;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) fit with deterministic
/// randomized restarts; returns the lowest-SSE run.
Logistic5Fit fit_logistic5(std::span<const double> metric, std::span<const double> dmos, int restarts = 20,
                           std::uint64_t seed = 0x5eed);

}  // namespace dvicom
