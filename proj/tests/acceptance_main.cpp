#include <iostream>

#include "CLI11.hpp"

#include "mnp/acceptance/criteria.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  mnp::acceptance::Options o;
  std::string work_dir = o.work_dir.string(), mesh_cache;
  app.add_option("--work-dir", work_dir);
  app.add_option("--mesh-cache", mesh_cache);
  app.add_option("--only", o.only)->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  o.work_dir = work_dir;
  o.mesh_cache = mesh_cache;
  const auto results = mnp::acceptance::run_suite(o, std::cout);
  std::size_t passed = 0;
  for (const auto& r : results) passed += r.passed();
  std::cout << passed << "/" << results.size() << " criteria passed" << std::endl;
  return passed == results.size() ? 0 : 1;
}
