#include <algorithm>
#include <chrono>
#include <cstdio>

#include "mnp/acceptance/criteria.hpp"
#include "mnp/cli_runner.hpp"

namespace mnp::acceptance {

nlohmann::json to_json(const CriterionResult& r) {
  return {{"id", r.id},
          {"name", r.name},
          {"passed", r.passed()},
          {"property_ok", r.property_ok},
          {"runtime_ok", r.runtime_ok},
          {"seconds", r.seconds},
          {"budget_seconds", r.budget_seconds},
          {"detail", r.detail},
          {"data", r.data}};
}

std::vector<CriterionResult> run_suite(const Options& options, std::ostream& out) {
  std::filesystem::create_directories(options.work_dir);
  std::vector<CriterionResult> results;
  for (const Criterion& c : criteria()) {
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), c.id) == options.only.end()) {
      continue;
    }
    CriterionResult r;
    r.id = c.id;
    r.name = c.name;
    r.budget_seconds = c.budget_seconds;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(options, r);
    } catch (const std::exception& e) {
      r.property_ok = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.runtime_ok = r.seconds < r.budget_seconds;
    char line[96];
    std::snprintf(line, sizeof line, "[%s] %d. %s: ", r.passed() ? "PASS" : "FAIL", r.id, r.name.c_str());
    char time[64];
    std::snprintf(time, sizeof time, "; %.1f s (budget %.0f s)", r.seconds, r.budget_seconds);
    out << line << r.detail << time << std::endl;
    results.push_back(r);
  }
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : results) j.push_back(to_json(r));
  const bool all = std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.passed(); });
  write_json(options.work_dir / "acceptance.json", {{"passed", all}, {"criteria", j}});
  return results;
}

}  // namespace mnp::acceptance
