// linf_varcalc: residual, energy, variation and equivalence checks from the command line.

#include "linf/run.hpp"
#include "linf/run_config.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Supremal energy and operator residual checks on sampled maps"};
  app.set_help_flag("-h,--help", "Show this help and exit");

  std::string command;
  std::string config_path;
  bool dump = false;
  std::map<std::string, std::string> values;

  app.add_option("command", command, "residual, energy, variations, check or selftest");
  app.add_option("--config", config_path, "read key = value settings from this file (flags take precedence)");
  app.add_flag("--dump-config", dump, "print the resolved configuration and exit");
  for (const auto& key : linf::config_keys()) {
    if (key.key == "command") continue;
    app.add_option(key.flag, values[key.key], key.help + " [" + key.key + "]");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return linf::kExitUsage;
  }

  linf::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = linf::load_config_file(config_path, cfg);
    if (!command.empty()) cfg.command = command;
    for (const auto& key : linf::config_keys()) {
      if (key.key == "command") continue;
      if (app.count(key.flag) > 0) linf::set_config_value(cfg, key.key, values[key.key]);
    }
  } catch (const linf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return linf::kExitUsage;
  }

  if (dump) {
    std::cout << linf::dump_config(cfg);
    return linf::kExitPass;
  }
  return linf::run(cfg, std::cout, std::cerr);
}
