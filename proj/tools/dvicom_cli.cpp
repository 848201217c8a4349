// Command-line front end: score, batch, fit, realign, calibrate, maps, sweep, chart.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "dvicom/csv.hpp"
#include "dvicom/dataset.hpp"
#include "dvicom/image_io.hpp"
#include "dvicom/metrics.hpp"
#include "dvicom/model.hpp"
#include "dvicom/stats.hpp"

namespace fs = std::filesystem;
using namespace dvicom;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

void add_config_flags(CLI::App* cmd, PipelineConfig& config) {
  cmd->add_option("--s", config.s, "gradient operator scale (pixels)")->capture_default_str();
  cmd->add_option("--sw", config.s_w, "analysis window spread (pixels)")->capture_default_str();
  cmd->add_option("--xi", config.ridge, "ridge penalty of the local fit")->capture_default_str();
  cmd->add_option("--alpha", config.alpha, "spurious-prediction compensation")->capture_default_str();
  cmd->add_option("--gamma", config.params.gamma, "detail-loss exponent")->capture_default_str();
  cmd->add_option("--upsilon", config.params.upsilon, "detail-loss regularizer")->capture_default_str();
  cmd->add_option("--c", config.params.c, "spurious-detail working point")->capture_default_str();
  cmd->add_option("--sigma-v2", config.params.sigma_v2, "gradient noise floor")->capture_default_str();
  cmd->add_option("--edge-frac", config.params.edge_frac, "edge exclusion fraction")->capture_default_str();
  cmd->add_option("--rho-threshold", config.params.rho_threshold, "full-weight residual ratio")
      ->capture_default_str();
  cmd->add_option("--rho-low", config.params.rho_low, "reduced pooling weight")->capture_default_str();
  cmd->add_flag("--fast", config.fast, "decimated local fit");
}

QualityModel load_model(const std::string& path) {
  if (path.empty()) return id_vicom();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path);
  try {
    auto j = nlohmann::json::parse(in);
    return model_from_json(j.contains("model") ? j.at("model") : j);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("malformed model file " + path + ": " + e.what());
  }
}

void write_json(const nlohmann::json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    csv::write_text(path, text);
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& field : csv::split(text)) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size()) throw UsageError("bad number '" + field + "'");
    out.push_back(v);
  }
  return out;
}

nlohmann::json fit_json(const ModelFit& fit) { return {{"model", to_json(fit.model)}, {"report", to_json(fit.report)}}; }

double* sweep_target(PipelineConfig& config, const std::string& name, bool& pooling_only) {
  static const std::map<std::string, double MetricParams::*> pooling = {
      {"gamma", &MetricParams::gamma},         {"upsilon", &MetricParams::upsilon},
      {"c", &MetricParams::c},                 {"sigma_v2", &MetricParams::sigma_v2},
      {"edge_frac", &MetricParams::edge_frac}, {"rho_threshold", &MetricParams::rho_threshold},
      {"rho_low", &MetricParams::rho_low}};
  if (auto it = pooling.find(name); it != pooling.end()) {
    pooling_only = true;
    return &(config.params.*(it->second));
  }
  pooling_only = false;
  if (name == "s") return &config.s;
  if (name == "s_w") return &config.s_w;
  if (name == "xi") return &config.ridge;
  if (name == "alpha") return &config.alpha;
  throw UsageError("unknown sweep parameter '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detail-based full-reference image quality estimator"};
  app.require_subcommand(1);
  PipelineConfig config;

  // score
  std::string ref_path, test_path, model_path, out_path;
  auto* score = app.add_subcommand("score", "score one reference/test pair");
  score->add_option("reference", ref_path)->required();
  score->add_option("test", test_path)->required();
  score->add_option("--model", model_path, "model JSON (default: database-independent model)");
  add_config_flags(score, config);

  // batch
  std::string manifest_path, cache_path;
  unsigned workers = 1;
  auto* batch = app.add_subcommand("batch", "evaluate every pair of a manifest");
  batch->add_option("manifest", manifest_path)->required();
  batch->add_option("--out", out_path, "metric table CSV")->required();
  batch->add_option("--cache", cache_path, "metric cache CSV");
  batch->add_option("--workers", workers, "worker threads")->capture_default_str();
  add_config_flags(batch, config);

  // fit
  std::string table_path, form = "three", dmos_column = "dmos";
  double ratio = 1.64;
  auto* fit = app.add_subcommand("fit", "fit an affine DMOS model to a metric table");
  fit->add_option("table", table_path)->required();
  fit->add_option("--form", form, "three | two")->check(CLI::IsMember({"three", "two"}))->capture_default_str();
  fit->add_option("--r", ratio, "ratio for the two-parameter form")->capture_default_str();
  fit->add_option("--dmos-column", dmos_column)->capture_default_str();
  fit->add_option("--out", out_path, "model JSON (stdout when omitted)");

  // realign
  std::vector<std::string> tables, names;
  std::string weights_text, report_path;
  std::size_t anchor = 0;
  auto* realign = app.add_subcommand("realign", "map several databases onto one DMOS scale");
  realign->add_option("tables", tables, "metric tables, one per database")->required()->expected(2, -1);
  realign->add_option("--anchor", anchor, "index of the anchor database")->capture_default_str();
  realign->add_option("--weights", weights_text, "comma-separated DMOS scale weights");
  realign->add_option("--names", names, "database names")->delimiter(',');
  realign->add_option("--out", out_path, "merged CSV")->required();
  realign->add_option("--report", report_path, "joint fit JSON");

  // calibrate
  std::string clean_path, noisy_path;
  double a0u = 0.0, assigned = 0.0;
  auto* calibrate = app.add_subcommand("calibrate", "set the DMOS scale from one noisy image");
  calibrate->add_option("clean", clean_path)->required();
  calibrate->add_option("noisy", noisy_path)->required();
  calibrate->add_option("--a0", a0u, "DMOS of a perfect image")->required();
  calibrate->add_option("--dmos", assigned, "DMOS assigned to the noisy image")->required();
  calibrate->add_option("--out", out_path, "model JSON (stdout when omitted)");
  add_config_flags(calibrate, config);

  // maps
  std::string outdir;
  double attenuation_gain = 255.0, residual_gain = 4.0;
  auto* maps = app.add_subcommand("maps", "export gradient attenuation and residual maps");
  maps->add_option("reference", ref_path)->required();
  maps->add_option("test", test_path)->required();
  maps->add_option("--outdir", outdir)->required();
  maps->add_option("--attenuation-gain", attenuation_gain)->capture_default_str();
  maps->add_option("--residual-gain", residual_gain)->capture_default_str();
  add_config_flags(maps, config);

  // sweep
  std::string param, grid_text;
  auto* sweep = app.add_subcommand("sweep", "RMSE of the three-parameter fit over a parameter grid");
  sweep->add_option("manifest", manifest_path)->required();
  sweep->add_option("--param", param)->required();
  sweep->add_option("--grid", grid_text, "comma-separated values")->required();
  sweep->add_option("--out", out_path, "sweep CSV")->required();
  add_config_flags(sweep, config);

  // chart
  std::string iso_text = "10,20,30,40,50,60,70,80,90", iso_out;
  auto* chart = app.add_subcommand("chart", "cognitive chart data for a metric table");
  chart->add_option("table", table_path)->required();
  chart->add_option("--model", model_path);
  chart->add_option("--dmos-column", dmos_column)->capture_default_str();
  chart->add_option("--iso", iso_text, "DMOS levels of the iso-lines")->capture_default_str();
  chart->add_option("--out", out_path, "chart CSV")->required();
  chart->add_option("--iso-out", iso_out, "iso-line CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*score) {
      const auto ref = load_luminance(ref_path);
      const auto test = load_luminance(test_path);
      const MetricPair pair = evaluate_pair(ref, test, config);
      const QualityModel model = load_model(model_path);
      write_json({{"d_minus", pair.d_minus},
                  {"d_plus", pair.d_plus},
                  {"dmos", predict_dmos(pair, model)},
                  {"lambda_av", pair.lambda_av},
                  {"mu_av", pair.mu_av}},
                 "-");
    } else if (*batch) {
      const auto records = load_manifest(manifest_path);
      const BatchResult result = batch_evaluate(records, config, cache_path, workers);
      write_table(result.table, out_path);
      for (const auto& s : result.skipped) {
        std::cerr << "skipped record " << s.id << ": " << s.reason << "\n";
      }
      std::cerr << result.computed << " computed, " << result.cache_hits << " cached, " << result.skipped.size()
                << " skipped\n";
      if (!result.skipped.empty() && result.table.rows.empty()) return kData;
    } else if (*fit) {
      const MetricTable table = read_table(table_path, dmos_column);
      const auto pairs = table.pairs();
      const auto dmos = table.dmos();
      write_json(fit_json(form == "three" ? fit_affine(pairs, dmos) : fit_two_param(pairs, dmos, ratio)), out_path);
    } else if (*realign) {
      const auto weights = weights_text.empty() ? std::vector<double>(tables.size(), 1.0) : parse_list(weights_text);
      if (weights.size() != tables.size()) throw UsageError("one weight per table is required");
      if (!names.empty() && names.size() != tables.size()) throw UsageError("one name per table is required");
      std::vector<DatabaseTable> dbs;
      for (std::size_t i = 0; i < tables.size(); ++i) {
        dbs.push_back({names.empty() ? fs::path(tables[i]).stem().string() : names[i], read_table(tables[i]),
                       weights[i]});
      }
      const Realignment result = realign_databases(dbs, anchor);
      csv::write_text(out_path, merged_csv(result));
      nlohmann::json report = {{"r", result.joint.r},
                               {"cost", result.joint.cost},
                               {"iterations", result.joint.iterations},
                               {"anchor", dbs[anchor].name}};
      for (std::size_t i = 0; i < dbs.size(); ++i) {
        report["databases"].push_back({{"name", dbs[i].name},
                                       {"scale_weight", dbs[i].scale_weight},
                                       {"model", to_json(result.joint.models[i])},
                                       {"report", to_json(result.joint.reports[i])},
                                       {"offset", result.maps[i].offset},
                                       {"slope", result.maps[i].slope}});
      }
      if (!report_path.empty()) write_json(report, report_path);
    } else if (*calibrate) {
      const auto model =
          calibrate_from_noisy(load_luminance(clean_path), load_luminance(noisy_path), a0u, assigned, config);
      write_json(to_json(model), out_path);
    } else if (*maps) {
      const auto analysis = analyze_pair(load_luminance(ref_path), load_luminance(test_path), config);
      fs::create_directories(outdir);
      export_map(attenuation_map(analysis.ref_grad, analysis.prediction, config.params.display_v),
                 fs::path(outdir) / "attenuation.png", attenuation_gain);
      export_map(residual_map(analysis.prediction), fs::path(outdir) / "residual.png", residual_gain);
    } else if (*sweep) {
      const auto grid = parse_list(grid_text);
      const auto records = load_manifest(manifest_path);
      bool pooling_only = false;
      PipelineConfig trial = config;
      double* target = sweep_target(trial, param, pooling_only);
      std::vector<std::vector<MetricPair>> pairs(grid.size());
      for (const auto& rec : records) {
        const auto ref = load_luminance(rec.ref_path);
        const auto test = load_luminance(rec.test_path);
        if (pooling_only) {
          const PairAnalysis analysis = analyze_pair(ref, test, config);
          for (std::size_t g = 0; g < grid.size(); ++g) {
            *target = grid[g];
            pairs[g].push_back(score_analysis(analysis, trial.params));
          }
        } else {
          for (std::size_t g = 0; g < grid.size(); ++g) {
            *target = grid[g];
            pairs[g].push_back(evaluate_pair(ref, test, trial));
          }
        }
      }
      std::vector<double> dmos;
      for (const auto& rec : records) dmos.push_back(rec.dmos);
      std::string text = "param,value,rmse,srocc,lcc,aic,loocv_rmse\n";
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const ModelFit f = fit_affine(pairs[g], dmos);
        text += param + "," + csv::format_double(grid[g]) + "," + csv::format_double(f.report.rmse) + "," +
                csv::format_double(f.report.srocc) + "," + csv::format_double(f.report.lcc) + "," +
                csv::format_double(f.report.aic) + "," + csv::format_double(f.report.loocv_rmse) + "\n";
      }
      csv::write_text(out_path, text);
    } else if (*chart) {
      const MetricTable table = read_table(table_path, dmos_column);
      const auto pairs = table.pairs();
      const auto labels = table.impairments();
      const auto levels = parse_list(iso_text);
      const CognitiveChart data = cognitive_chart(pairs, labels, load_model(model_path), levels);
      csv::write_text(out_path, chart_csv(data));
      if (!iso_out.empty()) csv::write_text(iso_out, iso_lines_csv(data));
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
