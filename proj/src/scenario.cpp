#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>

#include "mnp/cli_runner.hpp"
#include "mnp/error.hpp"
#include "mnp/parallel.hpp"

namespace mnp {

namespace {

RunStatus parse_status(const std::string& s) {
  if (s == "ok") return RunStatus::ok;
  if (s == "stiffness-failure") return RunStatus::stiffness_failure;
  if (s == "divergence") return RunStatus::divergence;
  if (s == "unphysical") return RunStatus::unphysical;
  throw InvalidInput("unknown run status '" + s + "'");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

// the earlier of two failures decides the cell status
RunStatus worse(RunStatus a, RunStatus b) { return a != RunStatus::ok ? a : b; }

std::string disc_key(const Discretization& d) {
  std::string s = to_string(d);
  for (char& ch : s) {
    if (ch == ':' || ch == '.') ch = '_';
  }
  return s;
}

}  // namespace

OffsetSweepResult run_offset_sweep(const ScenarioConfig& config, const std::filesystem::path& out) {
  const auto start = std::chrono::steady_clock::now();
  const SweepSettings& s = config.sweep;
  std::vector<std::pair<int, int>> pixels = s.pixels;
  if (pixels.empty()) {
    for (int iy = 0; iy < s.fov_y; ++iy) {
      for (int ix = 0; ix < s.fov_x; ++ix) pixels.emplace_back(ix, iy);
    }
  }
  for (const auto& [ix, iy] : pixels) pixel_position(s, ix, iy);  // range check up front
  const std::vector<double> ks = s.anisotropies.empty() ? std::vector<double>{config.constants.anisotropy} : s.anisotropies;
  const std::vector<Vec3> axes = s.axes.empty() ? std::vector<Vec3>{config.axis.axis} : s.axes;

  const std::string text = canonical_config(config);
  OffsetSweepResult result;
  result.config_hash = content_hash(text);
  std::filesystem::create_directories(out / "cells");
  write_text(out / "config.ini", text);

  const std::size_t n = pixels.size() * ks.size() * axes.size();
  result.cells.resize(n);
  std::mutex collector;
  parallel_for(n, config.workers, [&](std::size_t i) {
    const std::size_t ia = i % axes.size();
    const std::size_t ik = (i / axes.size()) % ks.size();
    const auto [ix, iy] = pixels[i / (axes.size() * ks.size())];
    OffsetCell cell;
    cell.ix = ix;
    cell.iy = iy;
    cell.position = pixel_position(s, ix, iy);
    cell.offset = selection_field(config.gradient, cell.position);
    cell.anisotropy = ks[ik];
    cell.axis_index = ia;
    const std::string key = "p" + std::to_string(ix) + "_" + std::to_string(iy) + "_k" + std::to_string(ik) + "_a" +
                            std::to_string(ia);
    const auto status_path = out / "cells" / (key + ".json");
    if (std::filesystem::exists(status_path)) {
      const nlohmann::json j = read_json(status_path);
      if (j.value("hash", "") == result.config_hash && j.value("done", false)) {
        cell.status = parse_status(j.at("status"));
        cell.message = j.value("message", "");
        cell.relative_error = j.value("relative_error", std::numeric_limits<double>::quiet_NaN());
        cell.full_seconds = j.value("full_seconds", 0.0);
        cell.reduced_seconds = j.value("reduced_seconds", 0.0);
        cell.resumed = true;
        std::lock_guard<std::mutex> lock(collector);
        result.cells[i] = cell;
        return;
      }
    }
    ScenarioConfig cc = config;
    cc.constants.anisotropy = cell.anisotropy;
    cc.offset = config.offset + cell.offset;
    cc.axis.axis = axes[ia];
    const FieldSequence field = scenario_field(cc);
    SimulationOptions o = scenario_options(cc, field);
    const ParticleModel model = scenario_model(cc);
    o.precession = true;
    const SimulationResult full = simulate(model, field, o);
    o.precession = false;
    const SimulationResult reduced = simulate(model, field, o);
    cell.status = worse(full.status, reduced.status);
    cell.message = full.status != RunStatus::ok ? full.message : reduced.message;
    cell.full_seconds = full.wall_seconds;
    cell.reduced_seconds = reduced.wall_seconds;
    cell.relative_error = cell.status == RunStatus::ok
                              ? relative_l2(reduced.moments.derivative, full.moments.derivative)
                              : std::numeric_limits<double>::quiet_NaN();

    std::lock_guard<std::mutex> lock(collector);
    if (full.status == RunStatus::ok) write_trajectory_csv(out / "cells" / (key + ".csv"), full.moments);
    nlohmann::json j;
    j["hash"] = result.config_hash;
    j["done"] = true;
    j["status"] = to_string(cell.status);
    j["message"] = cell.message;
    j["relative_error"] = std::isfinite(cell.relative_error) ? nlohmann::json(cell.relative_error) : nlohmann::json();
    j["full_seconds"] = cell.full_seconds;
    j["reduced_seconds"] = cell.reduced_seconds;
    write_json(status_path, j);
    result.cells[i] = cell;
  });

  std::string csv = "ix,iy,x_mm,y_mm,hs_norm_mT,anisotropy,axis,status,relative_error\n";
  nlohmann::json cells = nlohmann::json::array();
  double ratio_sum = 0.0;
  std::size_t ratio_count = 0;
  for (const OffsetCell& c : result.cells) {
    const double hs_mT = c.offset.norm() * config.constants.mu0 * 1e3;
    csv += std::to_string(c.ix) + "," + std::to_string(c.iy) + "," + fmt17(c.position.x() * 1e3) + "," +
           fmt17(c.position.y() * 1e3) + "," + fmt17(hs_mT) + "," + fmt17(c.anisotropy) + "," +
           std::to_string(c.axis_index) + "," + to_string(c.status) + "," + fmt17(c.relative_error) + "\n";
    nlohmann::json j = {{"ix", c.ix},
                        {"iy", c.iy},
                        {"hs_norm_mT", hs_mT},
                        {"anisotropy", c.anisotropy},
                        {"axis", c.axis_index},
                        {"status", to_string(c.status)},
                        {"full_seconds", c.full_seconds},
                        {"reduced_seconds", c.reduced_seconds},
                        {"resumed", c.resumed}};
    if (c.status == RunStatus::ok && c.full_seconds > 0.0) {
      ratio_sum += c.reduced_seconds / c.full_seconds;
      ++ratio_count;
    }
    cells.push_back(j);
  }
  write_text(out / "results.csv", csv);
  result.wall_seconds = seconds_since(start);
  nlohmann::json rep;
  rep["command"] = "sweep offsets";
  rep["config_hash"] = result.config_hash;
  rep["cells"] = cells;
  rep["mean_runtime_ratio"] = ratio_count ? ratio_sum / ratio_count : 0.0;
  rep["wall_seconds"] = result.wall_seconds;
  write_json(out / "report.json", rep);
  return result;
}

AccuracySweepResult run_accuracy_sweep(const ScenarioConfig& config, const std::filesystem::path& out) {
  const auto start = std::chrono::steady_clock::now();
  const SweepSettings& s = config.sweep;
  if (!s.reference) throw InvalidParameter("accuracy sweep needs a reference discretization");
  if (s.discretizations.empty()) throw InvalidParameter("accuracy sweep needs at least one discretization");
  const std::vector<double> ds = s.diameters.empty() ? std::vector<double>{config.constants.core_diameter} : s.diameters;
  const std::vector<double> ks = s.anisotropies.empty() ? std::vector<double>{config.constants.anisotropy} : s.anisotropies;
  // the reference is solved once per (D, K) even if it is also listed
  std::vector<Discretization> discs = {*s.reference};
  for (const auto& d : s.discretizations) {
    if (to_string(d) != to_string(*s.reference)) discs.push_back(d);
  }

  const std::string text = canonical_config(config);
  AccuracySweepResult result;
  result.config_hash = content_hash(text);
  result.reference = to_string(*s.reference);
  std::filesystem::create_directories(out / "cells");
  write_text(out / "config.ini", text);

  struct Solve {
    RunStatus status = RunStatus::ok;
    std::string message;
    double seconds = 0.0;
    bool resumed = false;
    MomentTrajectory moments;
  };
  const std::size_t n = ds.size() * ks.size() * discs.size();
  std::vector<Solve> solves(n);
  std::mutex collector;
  parallel_for(n, config.workers, [&](std::size_t i) {
    const std::size_t id = i % discs.size();
    const std::size_t ik = (i / discs.size()) % ks.size();
    const std::size_t iD = i / (discs.size() * ks.size());
    const std::string key = "d" + std::to_string(iD) + "_k" + std::to_string(ik) + "_" + disc_key(discs[id]);
    const auto status_path = out / "cells" / (key + ".json");
    const auto traj_path = out / "cells" / (key + ".csv");
    Solve sv;
    if (std::filesystem::exists(status_path)) {
      const nlohmann::json j = read_json(status_path);
      if (j.value("hash", "") == result.config_hash && j.value("done", false)) {
        sv.status = parse_status(j.at("status"));
        sv.message = j.value("message", "");
        sv.seconds = j.value("wall_seconds", 0.0);
        sv.resumed = true;
        if (sv.status == RunStatus::ok) sv.moments = read_trajectory_csv(traj_path);
        std::lock_guard<std::mutex> lock(collector);
        solves[i] = std::move(sv);
        return;
      }
    }
    ScenarioConfig cc = config;
    cc.constants.core_diameter = ds[iD];
    cc.constants.hydro_diameter = std::max(config.constants.hydro_diameter, ds[iD]);
    cc.constants.anisotropy = ks[ik];
    cc.discretization = discs[id];
    const FieldSequence field = scenario_field(cc);
    const SimulationResult r = simulate(scenario_model(cc), field, scenario_options(cc, field));
    sv.status = r.status;
    sv.message = r.message;
    sv.seconds = r.wall_seconds;
    sv.moments = r.moments;
    std::lock_guard<std::mutex> lock(collector);
    if (r.status == RunStatus::ok) write_trajectory_csv(traj_path, r.moments);
    write_json(status_path, {{"hash", result.config_hash},
                             {"done", true},
                             {"status", to_string(sv.status)},
                             {"message", sv.message},
                             {"wall_seconds", sv.seconds}});
    solves[i] = std::move(sv);
  });

  std::string csv = "diameter_nm,anisotropy,discretization,status,relative_error\n";
  nlohmann::json cells = nlohmann::json::array();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t iD = 0; iD < ds.size(); ++iD) {
    for (std::size_t ik = 0; ik < ks.size(); ++ik) {
      const std::size_t base = (iD * ks.size() + ik) * discs.size();
      const Solve& ref = solves[base];
      for (std::size_t id = 0; id < discs.size(); ++id) {
        const Solve& sv = solves[base + id];
        AccuracyCell c;
        c.diameter = ds[iD];
        c.anisotropy = ks[ik];
        c.discretization = to_string(discs[id]);
        c.status = sv.status;
        c.message = sv.message;
        c.wall_seconds = sv.seconds;
        c.resumed = sv.resumed;
        c.relative_error = (sv.status == RunStatus::ok && ref.status == RunStatus::ok)
                               ? relative_l2(sv.moments.moment, ref.moments.moment)
                               : nan;
        csv += fmt17(c.diameter * 1e9) + "," + fmt17(c.anisotropy) + "," + c.discretization + "," +
               to_string(c.status) + "," + fmt17(c.relative_error) + "\n";
        cells.push_back({{"diameter_nm", c.diameter * 1e9},
                         {"anisotropy", c.anisotropy},
                         {"discretization", c.discretization},
                         {"status", to_string(c.status)},
                         {"message", c.message},
                         {"wall_seconds", c.wall_seconds},
                         {"resumed", c.resumed}});
        result.cells.push_back(c);
      }
    }
  }
  write_text(out / "results.csv", csv);
  result.wall_seconds = seconds_since(start);
  write_json(out / "report.json", {{"command", "sweep accuracy"},
                                   {"config_hash", result.config_hash},
                                   {"reference", result.reference},
                                   {"cells", cells},
                                   {"wall_seconds", result.wall_seconds}});
  return result;
}

}  // namespace mnp
