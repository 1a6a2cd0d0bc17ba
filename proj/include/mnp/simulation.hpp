#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "mnp/field_model.hpp"
#include "mnp/observables.hpp"
#include "mnp/ode.hpp"

namespace mnp {

struct ShDiscretization {
  int n_max = 20;
};

struct FvDiscretization {
  int level = 4;
  double beta = 0.2;
};

using Discretization = std::variant<ShDiscretization, FvDiscretization>;

// "sh:N" or "fv:level[:beta]"
Discretization parse_discretization(const std::string& text);
std::string to_string(const Discretization& d);

enum class InitialState { uniform, equilibrium };

struct SimulationOptions {
  Discretization discretization = ShDiscretization{};
  bool precession = true;
  IntegratorConfig integrator;  // t0, t_end, samples, tolerances
  InitialState initial = InitialState::uniform;
  bool compute_derivative = true;
  std::filesystem::path mesh_cache;
};

enum class RunStatus { ok, stiffness_failure, divergence, unphysical };
std::string to_string(RunStatus s);

struct SimulationResult {
  RunStatus status = RunStatus::ok;
  std::string message;
  MomentTrajectory moments;
  IntegratorStats stats;
  double wall_seconds = 0.0;
  double max_moment_ratio = 0.0;     // max |m| / m0
  double max_mass_error = 0.0;       // |mass - 1| over samples
  double max_truncation_ratio = 0.0; // SH only
  double max_reality_defect = 0.0;   // SH only
  double max_imaginary_moment = 0.0; // SH only
  double min_cell_value = 0.0;       // FV only
  std::vector<std::string> warnings;
};

// Uniform sample grid of `count` points on [t0, t1] (both ends included).
std::vector<double> uniform_samples(double t0, double t1, std::size_t count);

// Runs one trajectory.  Solver failures are reported through status, not
// thrown.  |m| > m0 (1 + 1e-6) marks the run unphysical.
SimulationResult simulate(const ParticleModel& model, const FieldSequence& field, const SimulationOptions& options);

// Stationary moment for a static field and axis.
Vec3 equilibrium_moment(const ParticleModel& model, const Vec3& H, const Vec3& n, const Discretization& disc,
                        bool precession = true, const std::filesystem::path& mesh_cache = {});

struct OperatorDump {
  Eigen::Index rows = 0;
  std::vector<Eigen::Triplet<std::complex<double>>> entries;
};
// M(t) for the given configuration (complex for SH, real values for FV).
OperatorDump dump_operator(const ParticleModel& model, const FieldSequence& field, const SimulationOptions& options,
                           double t);

}  // namespace mnp
