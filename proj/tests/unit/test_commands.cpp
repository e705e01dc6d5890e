#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "spectral_forge/commands.hpp"

using namespace spectral_forge;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

RunConfig quick_blocks(std::uint64_t seed) {
  return parse_config({{"command", "verify-blocks"},
                       {"seed", seed},
                       {"params", {{"sections", {"estimates", "differences"}}, {"random_polys", 20}}}});
}

}  // namespace

TEST(Commands, ParseConfigDefaults) {
  auto c = parse_config({{"command", "build-flc"}});
  EXPECT_EQ(c.command, "build-flc");
  EXPECT_EQ(c.seed, 0u);
  EXPECT_DOUBLE_EQ(c.tolerance_scale, 1.0);
  EXPECT_TRUE(c.params.is_object());
}

TEST(Commands, ConfigErrorsNameTheField) {
  EXPECT_NE(error_of([] { parse_config(nlohmann::json::object()); }).find("'command'"), std::string::npos);
  EXPECT_NE(error_of([] { parse_config({{"command", "fly"}}); }).find("'command'"), std::string::npos);
  EXPECT_NE(error_of([] { parse_config({{"command", "build-flc"}, {"seed", "x"}}); }).find("'seed'"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_config({{"command", "build-flc"}, {"params", 3}}); }).find("'params'"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_config({{"command", "build-flc"}, {"tolerance_scale", -1.0}}); })
                .find("'tolerance_scale'"),
            std::string::npos);
  EXPECT_NE(error_of([] { param<double>(nlohmann::json{{"h", "wide"}}, "h", 0.5); }).find("'h'"),
            std::string::npos);
}

TEST(Commands, LoadConfigReportsLine) {
  auto p = std::filesystem::temp_directory_path() / "spectral_forge_bad_config.json";
  {
    std::ofstream f(p);
    f << "{\n  \"command\": \"build-flc\",\n  \"seed\": ,\n}\n";
  }
  auto msg = error_of([&] { load_config(p); });
  EXPECT_NE(msg.find(":3:"), std::string::npos) << msg;
  std::filesystem::remove(p);
  EXPECT_THROW(load_config(p), ConfigError);
}

TEST(Commands, UnknownSectionIsRejected) {
  auto c = parse_config({{"command", "verify-blocks"}, {"params", {{"sections", {"bogus"}}}}});
  EXPECT_THROW(run(c), ConfigError);
}

TEST(Commands, InverseSquareTailBoundsTheSum) {
  for (double p : {1.0, 1.5, 2.0})
    for (std::int64_t N : {4, 64}) {
      double s = 0.0;
      for (std::int64_t n = N + 1; n <= 2000000; ++n) s += std::pow(3.0 / (double(n) * double(n)), p);
      EXPECT_GE(inverse_square_tail(3.0, N, p), std::pow(2.0 * s, 1.0 / p)) << p << " " << N;
    }
}

TEST(Commands, ShortNumbers) {
  EXPECT_EQ(short_number(0.05), "0.05");
  EXPECT_EQ(short_number(1.0 / 3.0), "0.333333");
}

TEST(Commands, VerifyBlocksPassesAndIsDeterministic) {
  auto a = run(quick_blocks(7));
  EXPECT_TRUE(a.all_pass()) << a.summary();
  EXPECT_GT(a.checks.size(), 20u);
  EXPECT_EQ(a.to_json().dump(), run(quick_blocks(7)).to_json().dump());
}

TEST(Commands, AlphaParameters) {
  auto a = alpha_from({{"alpha", {{"kind", "c_over_sqrt_n"}, {"c", 0.2}}}});
  EXPECT_EQ(a.kind, "c_over_sqrt_n");
  EXPECT_DOUBLE_EQ(a.c, 0.2);
  EXPECT_THROW(perturb_params_from({{"alpha", {{"kind", "nope"}}}}), ConfigError);
  EXPECT_THROW(perturb_params_from({{"s", "two"}}), ConfigError);
}
