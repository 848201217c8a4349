#include "dvicom/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <Eigen/QR>

namespace dvicom {

QualityModel id_vicom() {
  QualityModel m;
  m.form = ModelForm::two_param;
  m.a0 = 8.0;
  m.a1_plus = 45.0;
  m.r = 1.64;
  return m;
}

double predict_dmos(const MetricPair& pair, const QualityModel& model) {
  if (model.form == ModelForm::two_param) {
    return model.a0 + model.a1_plus * (pair.d_plus + model.r * pair.d_minus);
  }
  return model.a0 + model.a1_minus * pair.d_minus + model.a1_plus * pair.d_plus;
}

nlohmann::json to_json(const QualityModel& model) {
  nlohmann::json j;
  if (model.form == ModelForm::three_param) {
    j["form"] = "three-param";
    j["a0"] = model.a0;
    j["a1_minus"] = model.a1_minus;
    j["a1_plus"] = model.a1_plus;
  } else {
    j["form"] = "two-param";
    j["a0"] = model.a0;
    j["a1_plus"] = model.a1_plus;
    j["r"] = model.r;
  }
  return j;
}

QualityModel model_from_json(const nlohmann::json& j) {
  try {
    QualityModel m;
    const auto form = j.at("form").get<std::string>();
    m.a0 = j.at("a0").get<double>();
    m.a1_plus = j.at("a1_plus").get<double>();
    if (form == "three-param") {
      m.form = ModelForm::three_param;
      m.a1_minus = j.at("a1_minus").get<double>();
    } else if (form == "two-param") {
      m.form = ModelForm::two_param;
      m.r = j.value("r", 1.64);
    } else {
      throw DataError("unknown model form '" + form + "'");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
}

nlohmann::json to_json(const FitReport& report) {
  auto num = [](double v) -> nlohmann::json { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  return {{"rmse", num(report.rmse)},           {"lcc", num(report.lcc)},
          {"srocc", num(report.srocc)},         {"aic", num(report.aic)},
          {"loocv_rmse", num(report.loocv_rmse)}, {"kurtosis", num(report.kurtosis)},
          {"p95", num(report.p95)},             {"n", report.n},
          {"p", report.p}};
}

namespace {

Eigen::VectorXd solve_ls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) throw DataError("design matrix is rank deficient");
  return qr.solve(y);
}

FitReport linear_report(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd pred = design * beta;
  FitReport report = make_report({pred.data(), static_cast<size_t>(pred.size())},
                                 {y.data(), static_cast<size_t>(y.size())}, static_cast<size_t>(design.cols()));
  try {
    report.loocv_rmse = loocv_rmse(design, {y.data(), static_cast<size_t>(y.size())});
  } catch (const Error&) {
    report.loocv_rmse = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

Eigen::VectorXd as_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd two_param_design(std::span<const MetricPair> pairs, double r) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(pairs.size()), 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto& p = pairs[static_cast<size_t>(i)];
    x(i, 0) = 1.0;
    x(i, 1) = p.d_plus + r * p.d_minus;
  }
  return x;
}

void check_sizes(std::span<const MetricPair> pairs, std::span<const double> dmos, std::size_t min_n) {
  if (pairs.size() != dmos.size()) throw DataError("metric pairs and DMOS differ in length");
  if (pairs.size() < min_n) throw DataError("need at least " + std::to_string(min_n) + " samples");
}

}  // namespace

ModelFit fit_affine(std::span<const MetricPair> pairs, std::span<const double> dmos) {
  check_sizes(pairs, dmos, 4);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(pairs.size()), 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto& p = pairs[static_cast<size_t>(i)];
    x.row(i) << 1.0, p.d_minus, p.d_plus;
  }
  const Eigen::VectorXd y = as_vector(dmos);
  const Eigen::VectorXd beta = solve_ls(x, y);
  ModelFit fit;
  fit.model.form = ModelForm::three_param;
  fit.model.a0 = beta(0);
  fit.model.a1_minus = beta(1);
  fit.model.a1_plus = beta(2);
  fit.report = linear_report(x, y, beta);
  return fit;
}

ModelFit fit_two_param(std::span<const MetricPair> pairs, std::span<const double> dmos, double r) {
  check_sizes(pairs, dmos, 3);
  const Eigen::MatrixXd x = two_param_design(pairs, r);
  const Eigen::VectorXd y = as_vector(dmos);
  const Eigen::VectorXd beta = solve_ls(x, y);
  ModelFit fit;
  fit.model.form = ModelForm::two_param;
  fit.model.a0 = beta(0);
  fit.model.a1_plus = beta(1);
  fit.model.r = r;
  fit.report = linear_report(x, y, beta);
  return fit;
}

namespace {

struct Weighted {
  std::span<const MetricPair> pairs;
  Eigen::VectorXd dmos;
};

// (a0, a1+) LS solution at fixed r.
Eigen::Vector2d offset_slope(const Weighted& d, double r) {
  return solve_ls(two_param_design(d.pairs, r), d.dmos);
}

double dataset_sse(const Weighted& d, double r, const Eigen::Vector2d& a) {
  CompensatedSum s;
  for (Eigen::Index i = 0; i < d.dmos.size(); ++i) {
    const auto& p = d.pairs[static_cast<size_t>(i)];
    const double e = d.dmos(i) - (a(0) + a(1) * (p.d_plus + r * p.d_minus));
    s += e * e;
  }
  return s.value();
}

double profile_cost(const std::vector<Weighted>& data, double r) {
  CompensatedSum total;
  for (const auto& d : data) total += dataset_sse(d, r, offset_slope(d, r));
  return total.value();
}

// Golden-section minimization of the profile cost on [lo, hi].
double golden_section(const std::vector<Weighted>& data, double lo, double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = profile_cost(data, x1);
  double f2 = profile_cost(data, x2);
  while (hi - lo > 1e-12) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = profile_cost(data, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = profile_cost(data, x2);
    }
  }
  return 0.5 * (lo + hi);
}

// Coarse start from the per-dataset three-parameter slope ratios.
double coarse_ratio(const std::vector<Weighted>& data) {
  std::vector<double> ratios;
  for (const auto& d : data) {
    try {
      const std::span<const double> y(d.dmos.data(), static_cast<size_t>(d.dmos.size()));
      const auto fit = fit_affine(d.pairs, y);
      const double ratio = fit.model.a1_minus / fit.model.a1_plus;
      if (std::isfinite(ratio)) ratios.push_back(std::clamp(ratio, kJointRMin, kJointRMax));
    } catch (const Error&) {
    }
  }
  if (ratios.empty()) return 1.64;
  std::sort(ratios.begin(), ratios.end());
  return ratios[ratios.size() / 2];
}

}  // namespace

JointFit fit_joint_r(std::span<const JointDataset> datasets, int max_iterations) {
  if (datasets.empty()) throw DataError("joint fit needs at least one dataset");
  std::vector<Weighted> data;
  for (const auto& ds : datasets) {
    check_sizes(ds.pairs, ds.dmos, 3);
    if (!(ds.scale_weight > 0.0)) throw UsageError("scale weight must be positive");
    data.push_back({ds.pairs, as_vector(ds.dmos) * ds.scale_weight});
  }

  JointFit fit;
  double r = coarse_ratio(data);
  std::vector<Eigen::Vector2d> coeffs;
  for (const auto& d : data) coeffs.push_back(offset_slope(d, r));
  auto joint_cost = [&](double ratio) {
    CompensatedSum total;
    for (size_t k = 0; k < data.size(); ++k) total += dataset_sse(data[k], ratio, coeffs[k]);
    return total.value();
  };
  double cost = joint_cost(r);
  fit.cost_trace.push_back(cost);

  constexpr int kGrid = 350;
  const double step = (kJointRMax - kJointRMin) / kGrid;
  bool converged = false;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    // r step: minimize the summed squared residuals over r.
    double lo = kJointRMin;
    double hi = kJointRMax;
    if (iter == 1) {
      int best = 0;
      double best_cost = std::numeric_limits<double>::infinity();
      for (int i = 0; i <= kGrid; ++i) {
        const double c = profile_cost(data, kJointRMin + step * i);
        if (c < best_cost) {
          best_cost = c;
          best = i;
        }
      }
      lo = std::max(kJointRMin, kJointRMin + step * (best - 1));
      hi = std::min(kJointRMax, kJointRMin + step * (best + 1));
    } else {
      lo = std::max(kJointRMin, r - step);
      hi = std::min(kJointRMax, r + step);
    }
    const double candidate = golden_section(data, lo, hi);
    if (profile_cost(data, candidate) < joint_cost(r)) r = candidate;

    // (a0, a1+) step.
    for (size_t k = 0; k < data.size(); ++k) coeffs[k] = offset_slope(data[k], r);
    const double next = joint_cost(r);
    fit.cost_trace.push_back(next);
    fit.iterations = iter;
    const double change = std::abs(cost - next);
    cost = next;
    if (change <= 1e-10 * std::max(cost, std::numeric_limits<double>::min())) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NumericalError("joint r estimation did not converge in " + std::to_string(max_iterations) +
                         " iterations");
  }

  fit.r = r;
  fit.cost = cost;
  for (size_t k = 0; k < data.size(); ++k) {
    QualityModel m;
    m.form = ModelForm::two_param;
    m.a0 = coeffs[k](0);
    m.a1_plus = coeffs[k](1);
    m.r = r;
    fit.models.push_back(m);
    const Eigen::MatrixXd x = two_param_design(data[k].pairs, r);
    fit.reports.push_back(linear_report(x, data[k].dmos, coeffs[k]));
  }
  return fit;
}

QualityModel calibrate_from_pair(const MetricPair& pair, double a0U, double assigned_dmos) {
  if (!(assigned_dmos > a0U)) throw UsageError("assigned DMOS must exceed the offset a0U");
  constexpr double kRatio = 1.64;
  const double impairment = pair.d_plus + kRatio * pair.d_minus;
  if (impairment < 1e-6) throw NumericalError("calibration pair carries no measurable impairment");
  QualityModel m;
  m.form = ModelForm::two_param;
  m.a0 = a0U;
  m.a1_plus = (assigned_dmos - a0U) / impairment;
  m.r = kRatio;
  return m;
}

QualityModel calibrate_from_noisy(const LuminanceImage& clean, const LuminanceImage& noisy, double a0U,
                                  double assigned_dmos, const PipelineConfig& config) {
  if (!(assigned_dmos > a0U)) throw UsageError("assigned DMOS must exceed the offset a0U");
  return calibrate_from_pair(evaluate_pair(clean, noisy, config), a0U, assigned_dmos);
}

IsoLine iso_dmos_line(const QualityModel& model, double dmos) {
  if (model.a1_plus == 0.0) throw NumericalError("iso-DMOS lines need a nonzero d+ slope");
  return {dmos, (dmos - model.a0) / model.a1_plus, -model.slope_minus() / model.a1_plus};
}

CognitiveChart cognitive_chart(std::span<const MetricPair> pairs, std::span<const std::string> labels,
                               const QualityModel& model, std::span<const double> iso_levels) {
  if (!labels.empty() && labels.size() != pairs.size()) throw DataError("labels and pairs differ in length");
  CognitiveChart chart;
  for (size_t i = 0; i < pairs.size(); ++i) {
    chart.rows.push_back(
        {pairs[i].d_minus, pairs[i].d_plus, labels.empty() ? std::string() : labels[i], predict_dmos(pairs[i], model)});
  }
  for (double level : iso_levels) chart.iso_lines.push_back(iso_dmos_line(model, level));
  return chart;
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string chart_csv(const CognitiveChart& chart) {
  std::string out = "d_minus,d_plus,class,dmos_pred\n";
  for (const auto& row : chart.rows) {
    out += fmt_double(row.d_minus) + "," + fmt_double(row.d_plus) + "," + row.label + "," +
           fmt_double(row.dmos_pred) + "\n";
  }
  return out;
}

std::string iso_lines_csv(const CognitiveChart& chart) {
  std::string out = "dmos,intercept,slope\n";
  for (const auto& line : chart.iso_lines) {
    out += fmt_double(line.dmos) + "," + fmt_double(line.intercept) + "," + fmt_double(line.slope) + "\n";
  }
  return out;
}

}  // namespace dvicom
