#include "dvicom/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace dvicom {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, std::size_t min_size) {
  if (a.size() != b.size()) {
    throw DataError("length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (a.size() < min_size) throw DataError("need at least " + std::to_string(min_size) + " samples");
}

double mean(std::span<const double> x) {
  CompensatedSum s;
  for (double v : x) s += v;
  return s.value() / static_cast<double>(x.size());
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> obs) {
  check_pair(pred, obs, 1);
  CompensatedSum s;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - obs[i];
    s += d * d;
  }
  return std::sqrt(s.value() / static_cast<double>(pred.size()));
}

double lcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  const double mx = mean(x);
  const double my = mean(y);
  CompensatedSum sxy, sxx, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx.value() <= 0.0 || syy.value() <= 0.0) throw DataError("correlation of a zero-variance sample");
  return std::clamp(sxy.value() / std::sqrt(sxx.value() * syy.value()), -1.0, 1.0);
}

std::vector<double> fractional_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    const double average = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = average;
    i = j;
  }
  return ranks;
}

double srocc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  return lcc(rx, ry);
}

double aic(std::size_t n, double rmse_value, std::size_t p) {
  if (n < 1) throw DataError("AIC needs at least one sample");
  if (!(rmse_value > 0.0)) throw NumericalError("AIC undefined for RMSE <= 0");
  return 2.0 * static_cast<double>(n) * std::log(rmse_value) + 2.0 * static_cast<double>(p + 1);
}

std::vector<double> aic_weights(std::span<const double> aics) {
  if (aics.empty()) throw DataError("no AIC values");
  const double best = *std::min_element(aics.begin(), aics.end());
  std::vector<double> out;
  out.reserve(aics.size());
  for (double a : aics) out.push_back(std::exp(-0.5 * (a - best)));
  return out;
}

Eigen::VectorXd hat_diagonal(const Eigen::MatrixXd& design) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (n <= p) throw DataError("need more samples than parameters");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_check(design);
  if (rank_check.rank() < p) throw DataError("design matrix is rank deficient");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  return q.rowwise().squaredNorm();
}

double loocv_rmse(const Eigen::MatrixXd& design, std::span<const double> obs) {
  if (static_cast<Eigen::Index>(obs.size()) != design.rows()) throw DataError("design/observation size mismatch");
  const Eigen::VectorXd h = hat_diagonal(design);
  const Eigen::Map<const Eigen::VectorXd> y(obs.data(), static_cast<Eigen::Index>(obs.size()));
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd e = y - design * beta;
  CompensatedSum press;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (h(i) >= 1.0 - 1e-12) throw NumericalError("observation " + std::to_string(i) + " is interpolated exactly");
    const double loo = e(i) / (1.0 - h(i));
    press += loo * loo;
  }
  return std::sqrt(press.value() / static_cast<double>(e.size()));
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DataError("incomplete beta needs positive shape parameters");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_cdf(double x, double d1, double d2) {
  if (x <= 0.0) return 0.0;
  return incomplete_beta(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2));
}

double f_test_threshold(std::size_t n1, std::size_t n2, double alpha) {
  if (n1 < 2 || n2 < 2) throw DataError("F test needs at least two samples per group");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("significance must lie in (0, 1)");
  const double d1 = static_cast<double>(n1 - 1);
  const double d2 = static_cast<double>(n2 - 1);
  const double target = 1.0 - alpha;
  double lo = 0.0;
  double hi = 1.0;
  while (f_cdf(hi, d1, d2) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw NumericalError("F quantile bracket overflow");
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f_cdf(mid, d1, d2) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double kurtosis(std::span<const double> x) {
  if (x.size() < 4) throw DataError("kurtosis needs at least 4 samples");
  const double m = mean(x);
  CompensatedSum m2, m4;
  for (double v : x) {
    const double d2 = (v - m) * (v - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  if (m2.value() <= 0.0) throw DataError("kurtosis of a zero-variance sample");
  const double n = static_cast<double>(x.size());
  const double var = m2.value() / n;
  return (m4.value() / n) / (var * var);
}

double percentile95(std::span<const double> x) {
  if (x.empty()) throw DataError("percentile of an empty sample");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = 0.95 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

FitReport make_report(std::span<const double> pred, std::span<const double> obs, std::size_t p) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  auto or_nan = [](auto&& fn) {
    try {
      return fn();
    } catch (const Error&) {
      return kNaN;
    }
  };
  FitReport r;
  r.n = obs.size();
  r.p = p;
  r.rmse = rmse(pred, obs);
  r.lcc = or_nan([&] { return lcc(pred, obs); });
  r.srocc = or_nan([&] { return srocc(pred, obs); });
  r.aic = r.rmse > 0.0 ? aic(r.n, r.rmse, p) : -std::numeric_limits<double>::infinity();
  std::vector<double> residuals(obs.size());
  std::vector<double> magnitudes(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    residuals[i] = obs[i] - pred[i];
    magnitudes[i] = std::abs(residuals[i]);
  }
  r.kurtosis = or_nan([&] { return kurtosis(residuals); });
  r.p95 = percentile95(magnitudes);
  return r;
}

double logistic5(const Logistic5& beta, double x) {
  const double z = beta[1] * (x - beta[2]);
  // 1/2 - 1/(1 + e^z) == tanh(z/2)/2, stable for any z.
  return beta[0] * 0.5 * std::tanh(0.5 * z) + beta[3] * x + beta[4];
}

namespace {

double logistic_sse(const Logistic5& beta, std::span<const double> x, std::span<const double> y) {
  CompensatedSum s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = logistic5(beta, x[i]) - y[i];
    s += d * d;
  }
  return s.value();
}

struct Refined {
  Logistic5 beta;
  double sse;
  std::vector<double> trace;
};

// Levenberg-Marquardt; only SSE-decreasing steps are accepted.
Refined refine_logistic(Logistic5 beta, std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<Eigen::Index>(x.size());
  double sse = logistic_sse(beta, x, y);
  std::vector<double> trace{sse};
  if (!std::isfinite(sse)) return {beta, sse, trace};
  double damping = 1e-3;
  Eigen::MatrixXd jac(n, 5);
  Eigen::VectorXd res(n);
  for (int iter = 0; iter < 1000; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi = x[static_cast<size_t>(i)];
      const double z = beta[1] * (xi - beta[2]);
      const double th = std::tanh(0.5 * z);
      const double dth = 0.25 * (1.0 - th * th);  // d/dz of tanh(z/2)/2
      jac(i, 0) = 0.5 * th;
      jac(i, 1) = beta[0] * dth * (xi - beta[2]);
      jac(i, 2) = -beta[0] * dth * beta[1];
      jac(i, 3) = xi;
      jac(i, 4) = 1.0;
      res(i) = y[static_cast<size_t>(i)] - logistic5(beta, xi);
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * res;
    bool accepted = false;
    while (damping < 1e16) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal() += damping * (jtj.diagonal().array() + 1e-12).matrix();
      const Eigen::VectorXd step = lhs.ldlt().solve(jtr);
      Logistic5 trial = beta;
      for (int k = 0; k < 5; ++k) trial[k] += step(k);
      const double trial_sse = logistic_sse(trial, x, y);
      if (std::isfinite(trial_sse) && trial_sse < sse) {
        const double improvement = sse - trial_sse;
        beta = trial;
        sse = trial_sse;
        trace.push_back(sse);
        damping = std::max(damping * 0.3, 1e-12);
        accepted = true;
        if (improvement <= 1e-15 * std::max(sse, 1e-300)) return {beta, sse, trace};
        break;
      }
      damping *= 10.0;
    }
    if (!accepted || sse == 0.0) break;
  }
  return {beta, sse, trace};
}

}  // namespace

Logistic5Fit fit_logistic5(std::span<const double> metric, std::span<const double> dmos, int restarts,
                           std::uint64_t seed) {
  check_pair(metric, dmos, 6);
  const auto [xmin_it, xmax_it] = std::minmax_element(metric.begin(), metric.end());
  const auto [ymin_it, ymax_it] = std::minmax_element(dmos.begin(), dmos.end());
  const double xrange = std::max(*xmax_it - *xmin_it, 1e-12);
  const double yrange = std::max(*ymax_it - *ymin_it, 1e-12);
  const double xmid = 0.5 * (*xmax_it + *xmin_it);
  const double ymean = mean(dmos);
  double direction = 1.0;
  try {
    direction = lcc(metric, dmos) >= 0.0 ? 1.0 : -1.0;
  } catch (const Error&) {
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Logistic5Fit best;
  best.sse = std::numeric_limits<double>::infinity();
  const int runs = std::max(restarts, 1);
  for (int run = 0; run < runs; ++run) {
    Logistic5 start{direction * yrange, 4.0 / xrange, xmid, 0.0, ymean};
    if (run > 0) {
      start[0] *= std::pow(4.0, unit(rng));
      start[1] *= std::pow(8.0, unit(rng));
      start[2] = xmid + 0.5 * xrange * unit(rng);
      start[3] = 0.5 * direction * yrange / xrange * unit(rng);
      start[4] = ymean + 0.25 * yrange * unit(rng);
    }
    Refined run_fit = refine_logistic(start, metric, dmos);
    if (std::isfinite(run_fit.sse) && run_fit.sse < best.sse) {
      best.beta = run_fit.beta;
      best.sse = run_fit.sse;
      best.sse_trace = std::move(run_fit.trace);
    }
  }
  if (!std::isfinite(best.sse)) throw NumericalError("all logistic restarts diverged");
  std::vector<double> pred;
  pred.reserve(metric.size());
  for (double v : metric) pred.push_back(logistic5(best.beta, v));
  best.report = make_report(pred, dmos, 5);
  return best;
}

}  // namespace dvicom
