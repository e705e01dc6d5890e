#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spectral_forge/commands.hpp"

namespace sf = spectral_forge;

int main(int argc, char** argv) {
  CLI::App app{"spectral-forge: constrained-spectrum trigonometric constructions with A^p certificates"};
  app.require_subcommand(1);
  std::string config, out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance_scale;
  for (const auto& name : sf::known_commands()) {
    auto* sub = app.add_subcommand(name, "run " + name);
    sub->add_option("--config", config, "JSON config file");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "seed for randomized batteries");
    sub->add_option("--tolerance-scale", tolerance_scale, "multiplier on absolute tolerances");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    nlohmann::json j = config.empty() ? nlohmann::json{{"command", command}} : sf::load_config(config);
    if (!j.contains("command")) j["command"] = command;
    sf::RunConfig cfg = sf::parse_config(j);
    if (cfg.command != command)
      throw sf::ConfigError("config command '" + cfg.command + "' does not match subcommand '" + command + "'");
    if (seed) cfg.seed = *seed;
    if (tolerance_scale) {
      if (!(*tolerance_scale > 0)) throw sf::ConfigError("--tolerance-scale must be positive");
      cfg.tolerance_scale = *tolerance_scale;
    }
    if (out.empty()) {
      const char* env = std::getenv("SPECTRAL_FORGE_OUT");
      out = env ? env : "out/" + command;
    }
    auto rep = sf::run(cfg);
    sf::emit_report(rep, out);
    std::cout << rep.summary();
    return rep.all_pass() ? 0 : 1;
  } catch (const sf::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
