#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lpslab/common.hpp"
#include "lpslab/scenarios.hpp"

namespace {

// Error records go to stdout as single JSON lines so callers can parse
// failures without scraping stderr.
int emit_error(const std::string& kind, const std::string& message, int code) {
  nlohmann::ordered_json rec;
  rec["error"] = kind;
  rec["message"] = message;
  rec["exit_code"] = code;
  std::cout << rec.dump() << "\n";
  return code;
}

int run_command(const std::string& config_path, std::string out_dir) {
  std::ifstream in(config_path);
  if (!in) return emit_error("config", "cannot open config file: " + config_path, 2);
  nlohmann::json config;
  try {
    in >> config;
  } catch (const std::exception& e) {
    return emit_error("config", std::string("config is not valid JSON: ") + e.what(), 2);
  }

  try {
    const lps::ScenarioResult result = lps::run_scenario(config);
    if (out_dir.empty())
      out_dir = (std::filesystem::path("out") / result.scenario).string();
    lps::write_outputs(result, out_dir);

    int failed = 0;
    for (const auto& c : result.criteria) {
      std::cout << (c.pass ? "PASS" : "FAIL") << "  " << result.scenario << "/"
                << c.name << "  measured=" << c.measured
                << "  threshold=" << c.threshold << "\n";
      if (!c.pass) ++failed;
    }
    std::cout << result.scenario << ": " << (result.criteria.size() - failed) << "/"
              << result.criteria.size() << " criteria passed, outputs in " << out_dir
              << "\n";
    return failed == 0 ? 0 : 1;
  } catch (const lps::InvalidInput& e) {
    return emit_error("invalid_input", e.what(), 2);
  } catch (const lps::NumericalGuard& e) {
    return emit_error("numerical_guard", e.what(), 3);
  } catch (const std::exception& e) {
    return emit_error("internal", e.what(), 3);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Square-functional laboratory on finite weighted graphs"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario from a JSON config");
  std::string config_path, out_dir;
  run->add_option("--config", config_path, "path to the scenario config (JSON)")
      ->required();
  run->add_option("--out", out_dir, "output directory (default: out/<scenario>)");

  auto* list = app.add_subcommand("list", "list the registered scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::ostringstream msg;
    msg << e.what();
    return emit_error("usage", msg.str(), 2);
  }

  if (list->parsed()) {
    for (const auto& name : lps::scenario_names()) std::cout << name << "\n";
    return 0;
  }
  return run_command(config_path, out_dir);
}
