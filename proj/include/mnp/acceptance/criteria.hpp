#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace mnp::acceptance {

struct Options {
  std::filesystem::path work_dir = "acceptance_work";
  std::filesystem::path mesh_cache;  // default: <work_dir>/meshes
  std::vector<int> only;             // empty: all criteria
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool property_ok = false;
  bool runtime_ok = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::string detail;
  nlohmann::json data;

  bool passed() const { return property_ok && runtime_ok; }
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<void(const Options&, CriterionResult&)> run;
};

const std::vector<Criterion>& criteria();

// Runs the selected criteria, printing one PASS/FAIL line each, and writes
// <work_dir>/acceptance.json.
std::vector<CriterionResult> run_suite(const Options& options, std::ostream& out);
nlohmann::json to_json(const CriterionResult& r);

}  // namespace mnp::acceptance
