#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mnp/field_model.hpp"
#include "mnp/ident_dictionary.hpp"
#include "mnp/ident_xspace.hpp"
#include "mnp/simulation.hpp"

namespace mnp {

enum class DriveKind { static_field, sinusoidal, pulsed };

struct SweepSettings {
  int fov_x = 30, fov_y = 30;
  double pitch = 1e-3;                    // m
  std::vector<std::pair<int, int>> pixels;  // empty: the whole FOV
  std::vector<double> anisotropies;       // J/m^3, empty: particle value
  std::vector<Vec3> axes;                 // easy axes, empty: particle axis
  std::vector<double> diameters;          // m (accuracy sweep)
  std::vector<Discretization> discretizations;
  std::optional<Discretization> reference;
};

struct ScenarioConfig {
  RotationMode rotation = RotationMode::neel;
  PhysicalConstants constants;
  EasyAxis axis;

  DriveKind drive = DriveKind::sinusoidal;
  SinusoidalDrive sinusoidal;
  PulsedDrive pulsed;
  Vec3 static_field = Vec3::Zero();  // A/m
  Vec3 offset = Vec3::Zero();        // A/m
  double gradient = 7.0 / (4e-7 * std::numbers::pi);  // A/m^2

  Discretization discretization = ShDiscretization{20};
  bool precession = true;
  IntegratorConfig integrator;
  double periods = 1.0;
  std::size_t samples = 1001;
  InitialState initial = InitialState::uniform;
  std::filesystem::path mesh_cache;

  std::filesystem::path output = "runs";
  int workers = 1;
  std::vector<Vec3> receive_profiles = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};

  SweepSettings sweep;
  ParameterGrid dictionary_grid;
  DictionaryConfig dictionary;
  XspaceConfig xspace;
  std::vector<double> xspace_diameters;
};

// INI text with sections [particle] [field] [solver] [output] [sweep]
// [dictionary] [xspace].  Unknown sections or keys are rejected.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);
// Fully expanded INI that parses back to the same configuration.
std::string canonical_config(const ScenarioConfig& config);
// SHA-1 of "blob <len>\0<text>", hex encoded.
std::string content_hash(const std::string& text);

// Default configuration for the dictionary grid of the MPS experiment.
ParameterGrid default_dictionary_grid();

ParticleModel scenario_model(const ScenarioConfig& config);
FieldSequence scenario_field(const ScenarioConfig& config);
SimulationOptions scenario_options(const ScenarioConfig& config, const FieldSequence& field);
// Pixel centre positions on the z = 0 plane, symmetric about the origin.
Vec3 pixel_position(const SweepSettings& sweep, int ix, int iy);
// H_S(x) = G diag(-0.5, -0.5, 1) x
Vec3 selection_field(double gradient, const Vec3& x);

struct RunReport {
  std::string name;
  RunStatus status = RunStatus::ok;
  std::string message;
  double wall_seconds = 0.0;
  IntegratorStats stats;
  std::string config_hash;
  double max_moment_ratio = 0.0;
  bool unphysical = false;
  std::vector<std::string> warnings;
};
nlohmann::json to_json(const RunReport& r);
RunReport make_report(const std::string& name, const SimulationResult& r, const std::string& hash);

// t, mx, my, mz, dmx, dmy, dmz, v_ch1, ...
void write_trajectory_csv(const std::filesystem::path& path, const MomentTrajectory& m,
                          const VoltageTrace* voltage = nullptr);
MomentTrajectory read_trajectory_csv(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// <out>/config.ini, trajectory.csv, report.json
RunReport run_single(const ScenarioConfig& config, const std::filesystem::path& out);

struct OffsetCell {
  int ix = 0, iy = 0;
  Vec3 position = Vec3::Zero();
  Vec3 offset = Vec3::Zero();
  double anisotropy = 0.0;
  std::size_t axis_index = 0;
  RunStatus status = RunStatus::ok;
  std::string message;
  double relative_error = 0.0;  // dm/dt, reduced vs full
  double full_seconds = 0.0;
  double reduced_seconds = 0.0;
  bool resumed = false;
};

struct OffsetSweepResult {
  std::vector<OffsetCell> cells;
  std::string config_hash;
  double wall_seconds = 0.0;
};

// Full and precession-free solve per (pixel, anisotropy, axis).  Each cell
// persists under <out>/cells; finished cells are reloaded, not recomputed.
OffsetSweepResult run_offset_sweep(const ScenarioConfig& config, const std::filesystem::path& out);

struct AccuracyCell {
  double diameter = 0.0;
  double anisotropy = 0.0;
  std::string discretization;
  RunStatus status = RunStatus::ok;
  std::string message;
  double relative_error = 0.0;  // NaN when this cell or the reference failed
  double wall_seconds = 0.0;
  bool resumed = false;
};

struct AccuracySweepResult {
  std::vector<AccuracyCell> cells;
  std::string reference;
  std::string config_hash;
  double wall_seconds = 0.0;
};

AccuracySweepResult run_accuracy_sweep(const ScenarioConfig& config, const std::filesystem::path& out);

}  // namespace mnp
