#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include <fstream>

#include "dvicom/csv.hpp"
#include "dvicom/dataset.hpp"
#include "test_support.hpp"

using namespace dvicom;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / ("dvicom_cli_tests_" + std::to_string(::getpid()));

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Run run(const std::string& args) {
  const auto out = kDir / "stdout.txt", err = kDir / "stderr.txt";
  const std::string cmd = std::string(DVICOM_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

void save(const LuminanceImage& img, const fs::path& path) { write_gray_png(img.data().cast<std::uint8_t>(), path); }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
    const auto ref = testkit::camera();
    save(ref, kDir / "ref.png");
    save(testkit::gaussian_blur(ref, 2.0), kDir / "blur.png");
    save(testkit::add_noise(ref, 20.0), kDir / "noise.png");
    save(testkit::texture(64, 80), kDir / "other.png");
    const auto small = LuminanceImage(ref.data().block(0, 0, 96, 96));
    std::string manifest = "ref_path,test_path,dmos,impairment,database\n";
    save(small, kDir / "s_ref.png");
    for (int i = 0; i < 6; ++i) {
      const std::string b = "s_blur" + std::to_string(i) + ".png", n = "s_noise" + std::to_string(i) + ".png";
      save(testkit::gaussian_blur(small, 0.5 + 0.6 * i), kDir / b);
      save(testkit::add_noise(small, 4.0 + 6 * i, 50 + i), kDir / n);
      manifest += "s_ref.png," + b + "," + std::to_string(15 + 9 * i) + ",gblur,synth\n";
      manifest += "s_ref.png," + n + "," + std::to_string(12 + 8 * i + (i % 2)) + ",wn,synth\n";
    }
    csv::write_text(kDir / "manifest.csv", manifest);
  }
  static void TearDownTestSuite() { fs::remove_all(kDir); }
  static std::string p(const std::string& name) { return (kDir / name).string(); }
};

}  // namespace

TEST_F(Cli, ScoreIdentityUsesIdVicom) {
  const auto r = run("score " + p("ref.png") + " " + p("ref.png"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("d_minus").get<double>(), 0.0);
  EXPECT_EQ(j.at("d_plus").get<double>(), 0.0);
  EXPECT_EQ(j.at("dmos").get<double>(), 8.0);
}

TEST_F(Cli, ScoreWithModelFile) {
  csv::write_text(kDir / "live.json", R"({"form": "three-param", "a0": 7.8, "a1_minus": 71.2, "a1_plus": 47.0})");
  const auto r = run("score " + p("ref.png") + " " + p("blur.png") + " --model " + p("live.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const double expected = 7.8 + 71.2 * j.at("d_minus").get<double>() + 47.0 * j.at("d_plus").get<double>();
  EXPECT_NEAR(j.at("dmos").get<double>(), expected, 1e-9);
}

TEST_F(Cli, ExitCodes) {
  const auto mismatch = run("score " + p("ref.png") + " " + p("other.png"));
  EXPECT_EQ(mismatch.code, 2);
  EXPECT_NE(mismatch.err.find("256x256"), std::string::npos) << mismatch.err;
  EXPECT_NE(mismatch.err.find("80x64"), std::string::npos) << mismatch.err;
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("score " + p("ref.png")).code, 1);
  EXPECT_EQ(run("score " + p("ref.png") + " " + p("ref.png") + " --s 0.1").code, 1);
  EXPECT_EQ(run("score " + p("ref.png") + " " + p("missing.png")).code, 2);
  EXPECT_EQ(run("calibrate " + p("ref.png") + " " + p("ref.png") + " --a0 8 --dmos 40").code, 3);
  EXPECT_EQ(run("calibrate " + p("ref.png") + " " + p("noise.png") + " --a0 8 --dmos 8").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, BatchIsDeterministicAcrossWorkers) {
  ASSERT_EQ(run("batch " + p("manifest.csv") + " --out " + p("t1.csv") + " --workers 1").code, 0);
  ASSERT_EQ(run("batch " + p("manifest.csv") + " --out " + p("t4.csv") + " --workers 4 --cache " + p("c.csv")).code, 0);
  EXPECT_EQ(slurp(kDir / "t1.csv"), slurp(kDir / "t4.csv"));
  const auto rerun = run("batch " + p("manifest.csv") + " --out " + p("t5.csv") + " --cache " + p("c.csv"));
  EXPECT_NE(rerun.err.find("0 computed, 12 cached"), std::string::npos) << rerun.err;
  EXPECT_EQ(slurp(kDir / "t1.csv"), slurp(kDir / "t5.csv"));
}

TEST_F(Cli, FitEchoesExactCoefficients) {
  ASSERT_EQ(run("batch " + p("manifest.csv") + " --out " + p("fit_src.csv")).code, 0);
  auto table = read_table(kDir / "fit_src.csv");
  for (auto& row : table.rows) row.record.dmos = 10 + 70 * row.pair.d_minus + 50 * row.pair.d_plus;
  write_table(table, kDir / "exact.csv");
  const auto r = run("fit " + p("exact.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["model"]["a0"].get<double>(), 10, 1e-8);
  EXPECT_NEAR(j["model"]["a1_minus"].get<double>(), 70, 1e-8);
  EXPECT_NEAR(j["model"]["a1_plus"].get<double>(), 50, 1e-8);
  EXPECT_LT(j["report"]["rmse"].get<double>(), 1e-9);

  const auto two = run("fit " + p("exact.csv") + " --form two --r 1.4 --out " + p("two.json"));
  ASSERT_EQ(two.code, 0) << two.err;
  const auto jt = nlohmann::json::parse(slurp(kDir / "two.json"));
  EXPECT_EQ(jt["model"]["form"], "two-param");
  EXPECT_EQ(jt["model"]["r"].get<double>(), 1.4);
  EXPECT_EQ(run("fit " + p("exact.csv") + " --form four").code, 1);
}

TEST_F(Cli, MapsOnBlurFixture) {
  const auto r = run("maps " + p("ref.png") + " " + p("blur.png") + " --outdir " + p("maps_blur"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto att = load_luminance(kDir / "maps_blur" / "attenuation.png");
  const auto res = load_luminance(kDir / "maps_blur" / "residual.png");
  EXPECT_LT(res.data().mean(), 5.0);
  EXPECT_GT(att.data().mean(), 20.0);
  ASSERT_EQ(run("maps " + p("ref.png") + " " + p("noise.png") + " --outdir " + p("maps_noise")).code, 0);
  EXPECT_GT(load_luminance(kDir / "maps_noise" / "residual.png").data().mean(), 4 * res.data().mean());
}

TEST_F(Cli, SweepRepoolsAndReruns) {
  const auto r = run("sweep " + p("manifest.csv") + " --param gamma --grid 1,1.5,2 --out " + p("sweep.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = csv::read(kDir / "sweep.csv");
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.header[2], "rmse");
  EXPECT_EQ(t.rows[1][1], "1.5");
  ASSERT_EQ(run("sweep " + p("manifest.csv") + " --param s_w --grid 1,1.5 --out " + p("sweep2.csv")).code, 0);
  EXPECT_EQ(csv::read(kDir / "sweep2.csv").rows.size(), 2u);
  EXPECT_EQ(run("sweep " + p("manifest.csv") + " --param nope --grid 1 --out " + p("x.csv")).code, 1);

  // The gamma = 1.5 row equals a direct fit of the default batch.
  ASSERT_EQ(run("batch " + p("manifest.csv") + " --out " + p("sweep_t.csv")).code, 0);
  const auto fit = run("fit " + p("sweep_t.csv"));
  const auto j = nlohmann::json::parse(fit.out);
  EXPECT_NEAR(std::stod(t.rows[1][2]), j["report"]["rmse"].get<double>(), 1e-12);
}

TEST_F(Cli, ChartAndRealignAndCalibrate) {
  ASSERT_EQ(run("batch " + p("manifest.csv") + " --out " + p("chart_t.csv")).code, 0);
  const auto c = run("chart " + p("chart_t.csv") + " --out " + p("chart.csv") + " --iso-out " + p("iso.csv"));
  ASSERT_EQ(c.code, 0) << c.err;
  const auto chart = csv::read(kDir / "chart.csv");
  EXPECT_EQ(chart.header, (std::vector<std::string>{"d_minus", "d_plus", "class", "dmos_pred"}));
  EXPECT_EQ(chart.rows.size(), 12u);
  EXPECT_EQ(csv::read(kDir / "iso.csv").rows.size(), 9u);

  const auto r = run("realign " + p("chart_t.csv") + " " + p("chart_t.csv") + " --names a,b --weights 1,1 --out " +
                     p("merged.csv") + " --report " + p("realign.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto merged = csv::read(kDir / "merged.csv");
  EXPECT_EQ(merged.rows.size(), 24u);
  EXPECT_EQ(merged.header.back(), "dmos_realigned");
  const auto report = nlohmann::json::parse(slurp(kDir / "realign.json"));
  EXPECT_NEAR(report["databases"][1]["slope"].get<double>(), 1.0, 1e-9);

  const auto cal = run("calibrate " + p("ref.png") + " " + p("noise.png") + " --a0 8 --dmos 40");
  ASSERT_EQ(cal.code, 0) << cal.err;
  const auto m = nlohmann::json::parse(cal.out);
  EXPECT_EQ(m["form"], "two-param");
  EXPECT_GT(m["a1_plus"].get<double>(), 0.0);
}
