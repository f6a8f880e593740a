// gateaux: run an experiment and write a CSV or JSON report.
//
//   gateaux converge --functional v4 --R 1 --n 10,30,100,300,1000
//   gateaux density --set even --N 1000000
//   gateaux passage --n 10 --reps 10000 --dt 1e-4
//
// Exit codes: 0 success, 2 usage error, 3 numeric failure.

#include "gateaux/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

namespace {

struct Subcommand {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::string config_path;
};

} // namespace

int main(int argc, char** argv)
{
  using namespace gateaux::cli;

  CLI::App app{"Means of functionals over high-dimensional spheres, and related experiments"};
  app.require_subcommand(1);

  std::map<std::string, Subcommand> subs;
  for (const auto& [name, params] : command_table()) {
    auto& sub = subs[name];
    sub.app = app.add_subcommand(name, command_summaries().at(name));
    for (const auto& spec : params) {
      std::string help = spec.help;
      if (!spec.default_value.empty()) {
        help += " [" + spec.default_value + "]";
      }
      sub.app->add_option("--" + spec.key, sub.values[spec.key], help);
    }
    for (const auto& key : global_keys()) {
      if (key == "timing") {
        sub.app->add_flag_callback("--timing", [&sub] { sub.values["timing"] = "1"; }, "fill the seconds column");
      } else {
        const char* help = key == "format" ? "csv or json"
                           : key == "seed" ? "root seed (default from GATEAUX_SEED)"
                                           : "report path (default stdout)";
        sub.app->add_option("--" + key, sub.values[key], help);
      }
    }
    sub.app->add_option("--config", sub.config_path, "key = value file; flags override it");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    for (auto& [name, sub] : subs) {
      if (!sub.app->parsed()) {
        continue;
      }
      std::map<std::string, std::string> flags;
      for (const auto& [key, value] : sub.values) {
        if (key == "timing" || sub.app->count("--" + key) > 0) {
          flags[key] = value;
        }
      }
      const auto file = sub.config_path.empty() ? std::map<std::string, std::string>{} : read_config_file(sub.config_path);
      const char* env = std::getenv(kSeedEnvVar);
      const RunConfig config =
          make_run_config(name, file, flags, env ? std::optional<std::string>(env) : std::nullopt);
      return run(config, std::cout, std::cerr);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
