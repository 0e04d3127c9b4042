// bwest: experiment runner for service-curve bandwidth estimation.
//
//   bwest run <config.json> [--out DIR] [--seed N] [--jobs K] [--set k=v]...
//   bwest preset <name>     [--out DIR] [--seed N] [--jobs K] [--set k=v]...
//   bwest list-presets
//
// Exit codes: 2 config schema violation, 3 simulation failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "bwest/presets.hpp"
#include "bwest/runner.hpp"

namespace {

std::string default_out_root() {
  if (const char* env = std::getenv("BWEST_OUT")) return env;
  return "bwest-out";
}

std::vector<std::pair<std::string, std::string>> parse_sets(const std::vector<std::string>& raw) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : raw) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw bwest::cli::ConfigError("--set expects key=value, got '" + s + "'");
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

int execute(bwest::cli::json cfg, const std::string& out_dir, int jobs,
            const std::vector<std::string>& sets, long long seed_override) {
  auto overrides = parse_sets(sets);
  if (seed_override >= 0) overrides.emplace_back("seed", std::to_string(seed_override));
  const auto t0 = std::chrono::steady_clock::now();
  const auto summary = bwest::cli::run_config(std::move(cfg), out_dir, jobs, overrides);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("wrote %s (kind=%s, config=%s, %.2f s)\n", (out_dir + "/summary.json").c_str(),
              summary.at("kind").get<std::string>().c_str(),
              summary.at("config_hash").get<std::string>().c_str(), secs);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"service-curve bandwidth estimation toolkit"};
  app.require_subcommand(1);

  std::string config_path, preset_name;
  std::string out_dir;
  int jobs = 1;
  long long seed = -1;
  std::vector<std::string> sets;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "override the base seed");
    cmd->add_option("--jobs", jobs, "parallel runs within the scenario");
    cmd->add_option("--set", sets, "override a config key (dotted path, key=value)");
  };

  auto* run = app.add_subcommand("run", "execute a scenario config file");
  run->add_option("config", config_path, "path to a scenario JSON file")->required();
  add_common(run);

  auto* preset = app.add_subcommand("preset", "execute a built-in preset");
  preset->add_option("name", preset_name, "preset name (see list-presets)")->required();
  add_common(preset);

  app.add_subcommand("list-presets", "list built-in presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("list-presets")) {
      for (const auto& [name, text] : bwest::cli::preset_configs()) {
        const auto cfg = bwest::cli::json::parse(text);
        std::printf("%-18s kind=%s runs=%d\n", name.c_str(),
                    cfg.at("kind").get<std::string>().c_str(), cfg.at("runs").get<int>());
      }
      return 0;
    }
    if (app.got_subcommand("run")) {
      std::ifstream in(config_path);
      if (!in) {
        std::fprintf(stderr, "error: cannot open config '%s'\n", config_path.c_str());
        return 2;
      }
      bwest::cli::json cfg;
      try {
        cfg = bwest::cli::json::parse(in);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "error: config parse failure: %s\n", e.what());
        return 2;
      }
      if (out_dir.empty()) out_dir = default_out_root() + "/run";
      return execute(std::move(cfg), out_dir, jobs, sets, seed);
    }
    // preset
    const auto& presets = bwest::cli::preset_configs();
    const auto it = presets.find(preset_name);
    if (it == presets.end()) {
      std::fprintf(stderr, "error: unknown preset '%s' (see list-presets)\n",
                   preset_name.c_str());
      return 2;
    }
    if (out_dir.empty()) out_dir = default_out_root() + "/" + preset_name;
    return execute(bwest::cli::json::parse(it->second), out_dir, jobs, sets, seed);
  } catch (const bwest::cli::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "simulation error: %s\n", e.what());
    return 3;
  }
}
