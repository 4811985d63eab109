// Command-line front end: one workflow per invocation, configured by a JSON file.

#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "skewopt/assembly.hpp"
#include "skewopt/config.hpp"
#include "skewopt/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Coefficient control for elliptic problems with singular skew parts"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  const std::pair<const char*, const char*> commands[] = {
      {"solve", "solve the state equation for one coefficient"},
      {"optimize", "projected descent on the coefficient"},
      {"sweep-truncate", "optimize along a schedule of truncated envelopes"},
      {"sweep-perforate", "optimize along a schedule of perforated domains"},
      {"validate-example", "numerical checks of the unit-ball example"},
      {"check-ftype", "scaling of perforation volume and hole area"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "random seed (overrides seeds)");
    sub->add_flag("--quiet", quiet, "do not print the summary");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  skewopt::RunConfig config;
  try {
    skewopt::apply_thread_limit();
    config = skewopt::load_config(config_path);
    if (config.command != skewopt::command_from_string(command))
      throw skewopt::ConfigError("command: config file is for '" + std::string(skewopt::to_string(config.command)) +
                                 "', not '" + command + "'");
  } catch (const skewopt::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (!out_dir.empty()) {
      try {
        const std::string summary = skewopt::write_error_summary(out_dir, command, 2, e.what());
        if (!quiet) std::cout << summary << '\n';
      } catch (const std::exception& w) {
        std::cerr << "error: cannot write summary: " << w.what() << '\n';
      }
    }
    return 2;
  }
  if (!out_dir.empty()) config.output_dir = out_dir;
  if (seed) config.seeds = *seed;

  const skewopt::RunArtifacts art = skewopt::run(config);
  if (art.exit_code != 0) std::cerr << "error: " << art.error << '\n';
  if (!quiet) std::cout << art.summary << '\n';
  return art.exit_code;
}
