#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "spectral_forge/report.hpp"

using namespace spectral_forge;

namespace {

ConstructionReport sample_report() {
  ConstructionReport r;
  r.command = "build-sparse";
  r.seed = 42;
  r.params = {{"p", 1.5}};
  r.add(upper_check("small", 0.1, 0.2, "direct"));
  r.add(lower_check("large", 3.0, 2.0));
  r.add(upper_check("undefined", std::numeric_limits<double>::quiet_NaN(), 1.0));
  r.lambdas.push_back({1, Frequency::real(1.25), 1.25, std::numeric_limits<double>::infinity(), 1.1, "", "", 0.0});
  r.coefficients.push_back({"Q", Frequency::lattice(2, 1, std::sqrt(2.0)), {0.5, -0.25}});
  r.residuals.push_back({"chi", 1, 1.5, 0.01, 0.1, "direct"});
  r.diagnostics["note"] = "x";
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST(Report, CheckSemantics) {
  EXPECT_TRUE(upper_check("a", 1.0, 2.0).pass());
  EXPECT_FALSE(upper_check("a", 2.0, 2.0).pass());
  EXPECT_TRUE(upper_check("a", 2.0, 2.0, "", true).pass());
  EXPECT_TRUE(lower_check("a", 3.0, 2.0).pass());
  EXPECT_FALSE(lower_check("a", 2.0, 2.0).pass());
  EXPECT_TRUE(lower_check("a", 2.0, 2.0, "", true).pass());
  EXPECT_FALSE(upper_check("a", std::nan(""), 1.0).pass());
  EXPECT_FALSE(lower_check("a", 1.0, std::nan("")).pass());
}

TEST(Report, JsonRoundTripIsLossless) {
  auto r = sample_report();
  auto j = r.to_json();
  EXPECT_EQ(j["schema"], kSchemaVersion);
  EXPECT_FALSE(j["all_pass"].get<bool>());
  EXPECT_EQ(j["lambdas"][0]["ratio"], "inf");
  EXPECT_EQ(j["checks"][2]["measured"], "nan");
  auto back = ConstructionReport::from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.to_json().dump(), j.dump());
  EXPECT_EQ(back.coefficients[0].freq.kind, Frequency::Kind::Lattice);
}

TEST(Report, RejectsUnknownSchema) {
  auto j = sample_report().to_json();
  j["schema"] = "other/0";
  EXPECT_THROW(ConstructionReport::from_json(j), ConfigError);
  EXPECT_THROW(num_from(nlohmann::json("many")), ConfigError);
}

TEST(Report, SummaryListsEveryCheck) {
  auto s = sample_report().summary();
  EXPECT_NE(s.find("PASS small: measured 0.1 < 0.2 [direct]"), std::string::npos);
  EXPECT_NE(s.find("PASS large: measured 3 > 2"), std::string::npos);
  EXPECT_NE(s.find("FAIL undefined"), std::string::npos);
  EXPECT_NE(s.find("SOME CHECKS FAILED"), std::string::npos);
}

TEST(Report, EmitWritesAllFiles) {
  auto dir = std::filesystem::temp_directory_path() / "spectral_forge_report_test";
  std::filesystem::remove_all(dir);
  auto r = sample_report();
  emit_report(r, dir);
  for (auto f : {"report.json", "lambdas.csv", "coefficients.csv", "residuals.csv", "summary.txt"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "report.json")).dump(), r.to_json().dump());
  EXPECT_EQ(slurp(dir / "lambdas.csv").substr(0, 26), "n,lambda,ratio,required\n1,");
  EXPECT_NE(slurp(dir / "coefficients.csv").find("Q,lattice,2,1,"), std::string::npos);
  EXPECT_EQ(slurp(dir / "summary.txt"), r.summary());
  std::filesystem::remove_all(dir);
}

TEST(Report, CsvNumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678})
    EXPECT_EQ(std::stod(csv_number(v)), v);
}
