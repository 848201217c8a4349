#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dvicom/metrics.hpp"
#include "dvicom/stats.hpp"

namespace dvicom {

enum class ModelForm { three_param, two_param };

/// Affine DMOS model on the cognitive state (d-, d+).
struct QualityModel {
  ModelForm form = ModelForm::two_param;
  double a0 = 0.0;
  double a1_minus = 0.0;  ///< three-param form only
  double a1_plus = 0.0;
  double r = 1.64;  ///< two-param form only

  /// Slope on d-; r * a1_plus for the two-param form.
  double slope_minus() const { return form == ModelForm::two_param ? r * a1_plus : a1_minus; }
};

/// Database-independent estimator 8.0 + 45.0 (d+ + 1.64 d-).
QualityModel id_vicom();

double predict_dmos(const MetricPair& pair, const QualityModel& model);

nlohmann::json to_json(const QualityModel& model);
QualityModel model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FitReport& report);

struct ModelFit {
  QualityModel model;
  FitReport report;
};

/// Ordinary LS on [1, d-, d+].
ModelFit fit_affine(std::span<const MetricPair> pairs, std::span<const double> dmos);

/// Ordinary LS on [1, d+ + r d-].
ModelFit fit_two_param(std::span<const MetricPair> pairs, std::span<const double> dmos, double r);

struct JointDataset {
  std::vector<MetricPair> pairs;
  std::vector<double> dmos;
  double scale_weight = 1.0;  ///< multiplies dmos before fitting
};

struct JointFit {
  double r = 0.0;
  std::vector<QualityModel> models;  ///< per dataset, on its weighted DMOS scale
  std::vector<FitReport> reports;
  double cost = 0.0;                 ///< summed squared residuals
  std::vector<double> cost_trace;    ///< cost after every outer iteration
  int iterations = 0;
};

inline constexpr double kJointRMin = 0.5;
inline constexpr double kJointRMax = 4.0;

/// Shared-ratio fit: alternating per-dataset (a0, a1+) LS and a 1-D
/// golden-section search on r over [0.5, 4].
JointFit fit_joint_r(std::span<const JointDataset> datasets, int max_iterations = 500);

/// Two-param model with offset a0U whose slope maps the (clean, noisy)
/// pair onto assigned_dmos.
QualityModel calibrate_from_pair(const MetricPair& pair, double a0U, double assigned_dmos);
QualityModel calibrate_from_noisy(const LuminanceImage& clean, const LuminanceImage& noisy, double a0U,
                                  double assigned_dmos, const PipelineConfig& config);

struct ChartRow {
  double d_minus = 0.0;
  double d_plus = 0.0;
  std::string label;
  double dmos_pred = 0.0;
};

/// Iso-DMOS line d+ = intercept + slope * d-.
struct IsoLine {
  double dmos = 0.0;
  double intercept = 0.0;
  double slope = 0.0;
};

struct CognitiveChart {
  std::vector<ChartRow> rows;
  std::vector<IsoLine> iso_lines;
};

IsoLine iso_dmos_line(const QualityModel& model, double dmos);

CognitiveChart cognitive_chart(std::span<const MetricPair> pairs, std::span<const std::string> labels,
                               const QualityModel& model, std::span<const double> iso_levels = {});

/// CSV with header d_minus,d_plus,class,dmos_pred.
std::string chart_csv(const CognitiveChart& chart);
/// CSV with header dmos,intercept,slope.
std::string iso_lines_csv(const CognitiveChart& chart);

}  // namespace dvicom
