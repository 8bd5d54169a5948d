#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpslab/manifold.hpp"

namespace lps {

struct CriterionRow {
  std::string name;
  std::string anchor;  // serialized as "paper_anchor"
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ScenarioResult {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<CriterionRow> criteria;
  std::vector<Table> tables;

  bool passed() const {
    for (const CriterionRow& c : criteria)
      if (!c.pass) return false;
    return true;
  }
};

const std::vector<std::string>& scenario_names();

// Execute one registered scenario.  The config must name the scenario; every
// other key has a default:
//   seed      (42)
//   model     {"kind": "grid"|"dumbbell"|"binary_tree"|"file", ...}
//   potential {"kind": "none"|"random"|"values"|"file", ...}
//   p_list, draws, sizes, budget {restarts, steps, directions}, ...
// Randomness is drawn from one seeded stream in a fixed order, so a fixed
// seed reproduces every number bit for bit.
ScenarioResult run_scenario(const nlohmann::json& config);

// summary.json (scenario, seed, criteria[{name, paper_anchor, measured,
// threshold, pass}]) plus tables/<name>.csv under out_dir.
void write_outputs(const ScenarioResult& r, const std::string& out_dir);

}  // namespace lps
