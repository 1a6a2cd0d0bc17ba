#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

#include "mnp/cli_runner.hpp"
#include "mnp/error.hpp"

using namespace mnp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mnp_test_" + name);
  fs::remove_all(p);
  return p;
}

const char* kSmallRun = R"([particle]
rotation = neel
anisotropy = 1000
easy_axis = 0.3, 0.5, 0.8
[field]
drive = sinusoidal
frequency = 25000
[solver]
discretization = sh:6
periods = 0.2
samples = 41
)";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MNP_MNP_BINARY) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("config parsing is strict") {
  CHECK_NOTHROW(parse_config(""));
  CHECK_THROWS_AS(parse_config("[nonsense]\na = 1\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config("[particle]\ncolour = red\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config("[particle]\nrotation = sideways\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config("[particle]\nanisotropy = lots\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config("[sweep]\nfov = 3\n"), InvalidInput);

  const ScenarioConfig c = parse_config(kSmallRun);
  CHECK(c.constants.anisotropy == 1000.0);
  CHECK(c.axis.axis.norm() == doctest::Approx(1.0));
  CHECK(c.samples == 41);
}

TEST_CASE("canonical config round trip and hashing") {
  const std::string a = canonical_config(parse_config(kSmallRun));
  CHECK(canonical_config(parse_config(a)) == a);
  CHECK(content_hash(a) == content_hash(a));
  CHECK(content_hash(a) != content_hash(canonical_config(parse_config(""))));
  // git's empty blob
  CHECK(content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(content_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("pixel layout and selection field") {
  SweepSettings s;
  s.fov_x = s.fov_y = 3;
  s.pitch = 1e-3;
  CHECK(pixel_position(s, 1, 1).norm() == 0.0);
  CHECK((pixel_position(s, 2, 0) - Vec3(1e-3, -1e-3, 0.0)).norm() < 1e-18);
  CHECK_THROWS_AS(pixel_position(s, 3, 0), OutOfRange);
  CHECK((selection_field(2.0, Vec3(1.0, 2.0, 3.0)) - Vec3(-1.0, -2.0, 6.0)).norm() == 0.0);
}

TEST_CASE("single run writes its outputs") {
  const fs::path out = scratch("single");
  const RunReport r = run_single(parse_config(kSmallRun), out);
  CHECK(r.status == RunStatus::ok);
  CHECK_FALSE(r.unphysical);
  CHECK(fs::exists(out / "config.ini"));
  CHECK(fs::exists(out / "report.json"));
  const MomentTrajectory m = read_trajectory_csv(out / "trajectory.csv");
  CHECK(m.times.size() == 41);
  CHECK(read_json(out / "report.json").at("config_hash") == r.config_hash);
  fs::remove_all(out);
}

TEST_CASE("unphysical moments are flagged") {
  SimulationResult s;
  s.max_moment_ratio = 1.5;
  CHECK(make_report("x", s, "h").unphysical);
  s.max_moment_ratio = 0.9;
  CHECK_FALSE(make_report("x", s, "h").unphysical);
}

TEST_CASE("offset sweep") {
  ScenarioConfig c = parse_config(kSmallRun);
  c.sweep.fov_x = c.sweep.fov_y = 3;
  c.sweep.pitch = 1e-3;

  SUBCASE("no gradient gives identical cells") {
    c.gradient = 0.0;
    c.sweep.pixels = {{0, 0}, {2, 1}, {1, 2}};
    const fs::path out = scratch("sweep_flat");
    const OffsetSweepResult r = run_offset_sweep(c, out);
    REQUIRE(r.cells.size() == 3);
    for (const auto& cell : r.cells) {
      CHECK(cell.status == RunStatus::ok);
      CHECK(cell.relative_error == r.cells[0].relative_error);
    }
    fs::remove_all(out);
  }

  SUBCASE("mirrored pixels with rotated axes agree and cells resume") {
    // the half-turn about x maps pixel (ix, iy) to (ix, 2 - iy)
    const Vec3 a = Vec3(0.3, 0.5, 0.8).normalized();
    c.sweep.pixels = {{2, 0}, {2, 2}};
    c.sweep.axes = {a, Vec3(a.x(), -a.y(), -a.z())};
    const fs::path out = scratch("sweep_mirror");
    const OffsetSweepResult r = run_offset_sweep(c, out);
    REQUIRE(r.cells.size() == 4);
    // cell order: pixel-major, then anisotropy, then axis
    CHECK(r.cells[0].relative_error > 0.0);
    CHECK(r.cells[0].relative_error == doctest::Approx(r.cells[3].relative_error).epsilon(1e-3));
    CHECK(r.cells[1].relative_error == doctest::Approx(r.cells[2].relative_error).epsilon(1e-3));
    for (const auto& cell : r.cells) CHECK_FALSE(cell.resumed);

    const OffsetSweepResult again = run_offset_sweep(c, out);
    for (std::size_t i = 0; i < again.cells.size(); ++i) {
      CHECK(again.cells[i].resumed);
      CHECK(again.cells[i].relative_error == r.cells[i].relative_error);
    }
    // a changed configuration invalidates the stored cells
    c.constants.anisotropy = 1200.0;
    c.sweep.anisotropies.clear();
    const OffsetSweepResult changed = run_offset_sweep(c, out);
    for (const auto& cell : changed.cells) CHECK_FALSE(cell.resumed);
    fs::remove_all(out);
  }
}

TEST_CASE("accuracy sweep") {
  ScenarioConfig c = parse_config(kSmallRun);
  c.sweep.diameters = {20e-9};
  c.sweep.anisotropies = {1000.0};
  c.sweep.reference = ShDiscretization{8};
  c.sweep.discretizations = {ShDiscretization{8}, ShDiscretization{4}};
  const fs::path out = scratch("accuracy");
  const AccuracySweepResult r = run_accuracy_sweep(c, out);
  REQUIRE(r.cells.size() == 2);
  CHECK(r.reference == "sh:8");
  CHECK(r.cells[0].relative_error == 0.0);
  CHECK(r.cells[1].discretization == "sh:4");
  CHECK(r.cells[1].relative_error > 0.0);
  fs::remove_all(out);

  c.sweep.reference.reset();
  CHECK_THROWS_AS(run_accuracy_sweep(c, out), InvalidParameter);
}

TEST_CASE("command line") {
  const fs::path dir = scratch("cli");
  write_file(dir / "run.ini", kSmallRun);
  write_file(dir / "bad.ini", "[particle]\ncolour = red\n");
  CHECK(run_cli("simulate --config " + (dir / "run.ini").string() + " --out " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "trajectory.csv"));
  CHECK(run_cli("simulate --config " + (dir / "run.ini").string() + " --out " + (dir / "op").string() +
                " --dump-operator 0") == 0);
  CHECK(fs::exists(dir / "op" / "operator.csv"));
  CHECK(run_cli("simulate --config " + (dir / "bad.ini").string() + " --out " + (dir / "x").string()) == 2);
  CHECK(run_cli("simulate --config " + (dir / "run.ini").string() + " --disc bogus:3") == 2);
  CHECK(run_cli("simulate --precession maybe") != 0);
  CHECK(run_cli("frobnicate") != 0);
  fs::remove_all(dir);
}
