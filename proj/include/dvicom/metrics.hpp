#pragma once

#include "dvicom/core.hpp"
#include "dvicom/gradient.hpp"
#include "dvicom/image_io.hpp"
#include "dvicom/predictor.hpp"

namespace dvicom {

/// Windowed energies of the reference, predicted and residual gradients.
struct LocalEnergies {
  RealImage lambda_ref;   ///< sum_q w^2 |ref|^2
  RealImage lambda_pred;  ///< sum_q w^2 |pred|^2 - alpha * mu, clipped to [0, lambda_ref]
  RealImage mu;           ///< sum_q w^2 |residual|^2
};

struct MetricParams {
  double gamma = 1.5;
  double upsilon = 0.1;
  double c = 0.1;
  double sigma_v2 = 20.0;
  double edge_frac = 0.3;
  double rho_threshold = 0.01;
  double rho_low = 0.25;
  double display_v = 20.0;

  /// Throws UsageError when a constant is out of its admissible range.
  void validate() const;
};

/// Cognitive state of one reference/test pair.
struct MetricPair {
  double d_minus = 0.0;
  double d_plus = 0.0;
  double lambda_av = 0.0;
  double mu_av = 0.0;
};

LocalEnergies local_energies(const ComplexGradientField& ref_grad, const PredictionField& pred,
                             const AnalysisWindow& window, double alpha);

/// Pixels away from the strongest edge centers: |ref| < edge_frac * max|ref|.
/// An all-zero field yields an all-true mask.
Mask pooling_set(const ComplexGradientField& ref_grad, double edge_frac);

double detail_loss_metric(const LocalEnergies& energies, const Mask& mask, const MetricParams& params);

struct SpuriousDetail {
  double d_plus = 0.0;
  double lambda_av = 0.0;
  double mu_av = 0.0;
};

SpuriousDetail spurious_detail_metric(const LocalEnergies& energies, const Mask& mask, const MetricParams& params);

/// l(p) = 1 - (|pred| + V) / (|ref| + V).
RealImage attenuation_map(const ComplexGradientField& ref_grad, const PredictionField& pred, double display_v);

/// rho(p) = |residual|.
RealImage residual_map(const PredictionField& pred);

struct PipelineConfig {
  double s = 1.0;
  double s_w = 1.0;
  double ridge = kDefaultRidge;
  double alpha = kDefaultAlpha;
  MetricParams params;
  bool fast = false;

  void validate() const;
};

/// Every intermediate of one pair, kept so pooling constants can be varied
/// without recomputing the fields.
struct PairAnalysis {
  ComplexGradientField ref_grad;
  PredictionField prediction;
  LocalEnergies energies;
  bool identical = false;
};

PairAnalysis analyze_pair(const LuminanceImage& ref, const LuminanceImage& test, const PipelineConfig& config);

/// Pools an analysis into the metric pair under the given constants.
MetricPair score_analysis(const PairAnalysis& analysis, const MetricParams& params);

MetricPair evaluate_pair(const LuminanceImage& ref, const LuminanceImage& test, const PipelineConfig& config);

}  // namespace dvicom
