#include "dvicom/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace dvicom {

void MetricParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw UsageError(std::string(name) + " must be positive");
  };
  positive(gamma, "gamma");
  positive(upsilon, "upsilon");
  positive(c, "c");
  positive(sigma_v2, "sigma_v2");
  positive(edge_frac, "edge_frac");
  positive(rho_threshold, "rho_threshold");
  positive(rho_low, "rho_low");
  positive(display_v, "display_v");
  if (gamma < 1.0) throw UsageError("gamma must be >= 1");
  if (rho_low > 1.0) throw UsageError("rho_low must lie in (0, 1]");
  if (edge_frac >= 1.0) throw UsageError("edge_frac must lie in (0, 1)");
}

void PipelineConfig::validate() const {
  if (!(s >= 0.5)) throw UsageError("s must be >= 0.5");
  if (!(s_w >= 0.5)) throw UsageError("s_w must be >= 0.5");
  if (!(ridge > 0.0)) throw UsageError("ridge must be positive");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw UsageError("alpha must be non-negative");
  params.validate();
}

LocalEnergies local_energies(const ComplexGradientField& ref_grad, const PredictionField& pred,
                             const AnalysisWindow& window, double alpha) {
  if (pred.predicted.rows() != ref_grad.rows() || pred.predicted.cols() != ref_grad.cols()) {
    throw DataError("prediction and reference gradient differ in size");
  }
  LocalEnergies e;
  e.lambda_ref = window.windowed_sum(ref_grad.abs2()).max(0.0);
  e.mu = pred.residual_energy(window).max(0.0);
  const RealImage raw = window.windowed_sum(pred.predicted.abs2()) - alpha * e.mu;
  e.lambda_pred = raw.max(0.0).min(e.lambda_ref);
  return e;
}

Mask pooling_set(const ComplexGradientField& ref_grad, double edge_frac) {
  const RealImage magnitude = ref_grad.abs();
  const double peak = magnitude.size() > 0 ? magnitude.maxCoeff() : 0.0;
  if (peak == 0.0) return Mask::Constant(ref_grad.rows(), ref_grad.cols(), true);
  return magnitude < edge_frac * peak;
}

double detail_loss_metric(const LocalEnergies& energies, const Mask& mask, const MetricParams& params) {
  const double half_gamma = 0.5 * params.gamma;
  CompensatedSum num;
  CompensatedSum den;
  for (Eigen::Index r = 0; r < mask.rows(); ++r) {
    for (Eigen::Index c = 0; c < mask.cols(); ++c) {
      if (!mask(r, c)) continue;
      const double lref = energies.lambda_ref(r, c);
      const double weight = energies.mu(r, c) < params.rho_threshold * lref ? 1.0 : params.rho_low;
      num += weight * std::pow(energies.lambda_pred(r, c), half_gamma);
      den += weight * std::pow(lref, half_gamma);
    }
  }
  const double e = std::clamp((num.value() + params.upsilon) / (den.value() + params.upsilon), 0.0, 1.0);
  return 1.0 - e;
}

SpuriousDetail spurious_detail_metric(const LocalEnergies& energies, const Mask& mask, const MetricParams& params) {
  CompensatedSum lambda_sum;
  CompensatedSum mu_sum;
  Eigen::Index count = 0;
  for (Eigen::Index r = 0; r < mask.rows(); ++r) {
    for (Eigen::Index c = 0; c < mask.cols(); ++c) {
      if (!mask(r, c)) continue;
      lambda_sum += energies.lambda_ref(r, c);
      mu_sum += energies.mu(r, c);
      ++count;
    }
  }
  if (count == 0) throw DataError("empty pooling set");

  SpuriousDetail out;
  out.lambda_av = lambda_sum.value() / static_cast<double>(count);
  out.mu_av = mu_sum.value() / static_cast<double>(count);
  const double f = std::log1p(params.c * out.lambda_av / (out.mu_av + params.sigma_v2));
  const double f0 = std::log1p(params.c * out.lambda_av / params.sigma_v2);
  // lambda_av -> 0 limit of f / f0.
  const double t = f0 > 1e-300 ? f / f0 : params.sigma_v2 / (out.mu_av + params.sigma_v2);
  out.d_plus = std::clamp(1.0 - t, 0.0, 1.0);
  return out;
}

RealImage attenuation_map(const ComplexGradientField& ref_grad, const PredictionField& pred, double display_v) {
  return 1.0 - (pred.predicted.abs() + display_v) / (ref_grad.abs() + display_v);
}

RealImage residual_map(const PredictionField& pred) { return pred.residual.abs(); }

PairAnalysis analyze_pair(const LuminanceImage& ref, const LuminanceImage& test, const PipelineConfig& config) {
  config.validate();
  if (ref.width() != test.width() || ref.height() != test.height()) {
    throw DataError("image size mismatch: reference " + std::to_string(ref.width()) + "x" +
                    std::to_string(ref.height()) + ", test " + std::to_string(test.width()) + "x" +
                    std::to_string(test.height()));
  }
  const ComplexKernel cgg = make_cgg_kernel(config.s);
  const auto [h1, h2] = make_hermite_kernels(config.s);
  const AnalysisWindow window = make_window(config.s_w);

  PairAnalysis out;
  out.identical = ref == test;
  out.ref_grad = smoothed_gradient(ref, cgg);
  const ComplexGradientField test_grad = out.identical ? out.ref_grad : smoothed_gradient(test, cgg);
  const auto [ref1, ref2] = directional_components(out.ref_grad, h1, h2);
  out.prediction = config.fast ? local_ls_decompose_fast(out.ref_grad, ref1, ref2, test_grad, window, config.ridge)
                               : local_ls_decompose(out.ref_grad, ref1, ref2, test_grad, window, config.ridge);
  out.prediction.alpha = config.alpha;
  out.energies = local_energies(out.ref_grad, out.prediction, window, config.alpha);
  return out;
}

MetricPair score_analysis(const PairAnalysis& analysis, const MetricParams& params) {
  params.validate();
  if ((analysis.energies.lambda_ref == 0.0).all()) {
    throw DataError("degenerate reference: no gradient energy (constant image)");
  }
  const Mask mask = pooling_set(analysis.ref_grad, params.edge_frac);
  const SpuriousDetail spurious = spurious_detail_metric(analysis.energies, mask, params);
  MetricPair out;
  out.lambda_av = spurious.lambda_av;
  if (analysis.identical) {
    // Identical inputs carry neither lost nor spurious detail; the ridge
    // bias of the local fit is not scored.
    return out;
  }
  out.mu_av = spurious.mu_av;
  out.d_plus = spurious.d_plus;
  out.d_minus = detail_loss_metric(analysis.energies, mask, params);
  return out;
}

MetricPair evaluate_pair(const LuminanceImage& ref, const LuminanceImage& test, const PipelineConfig& config) {
  return score_analysis(analyze_pair(ref, test, config), config.params);
}

}  // namespace dvicom
