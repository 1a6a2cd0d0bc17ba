#pragma once

#include <vector>

#include <Eigen/Core>

#include "mnp/field_model.hpp"
#include "mnp/fv_solver.hpp"
#include "mnp/sh_solver.hpp"

namespace mnp {

struct MomentTrajectory {
  std::vector<double> times;
  std::vector<Vec3> moment;      // A m^2
  std::vector<Vec3> derivative;  // empty when not computed
  double m0 = 0.0;

  bool has_derivative() const { return !derivative.empty(); }
  std::size_t size() const { return times.size(); }
};

struct VoltageTrace {
  std::vector<double> times;
  std::vector<std::vector<double>> channels;
  std::vector<Vec3> receive_profiles;
  double concentration_volume = 1.0;
};

// Degree-1 read-out.  C^0_0 carries the mass, C^q_1 the moment.
Vec3 mean_moment_sh(const ShVector& coefficients, double m0, ShBasis basis = ShBasis::balanced);
inline Vec3 mean_moment_sh(const ShState& s, double m0) { return mean_moment_sh(s.coefficients, m0); }
// Imaginary residue of the moment read-out (zero for real densities).
double moment_imaginary_residue_sh(const ShVector& coefficients, ShBasis basis = ShBasis::balanced);

enum class FvMomentRule {
  exact,     // cell integrals of m (exact for piecewise-constant u)
  centroid,  // centroid direction times area
};
Vec3 mean_moment_fv(const TriMesh& mesh, const Eigen::VectorXd& u, double m0,
                    FvMomentRule rule = FvMomentRule::exact);
inline Vec3 mean_moment_fv(const FvState& s, double m0) { return mean_moment_fv(*s.mesh, s.u, m0); }

// Second-order central differences (one-sided at the ends).
std::vector<Vec3> finite_difference_derivative(const std::vector<double>& t, const std::vector<Vec3>& m);

// v = a * (-mu0 cV p . dm/dt) for each receive profile p.  An empty
// filter is the identity; otherwise the filter is a sampled kernel applied
// as a periodic convolution over the (uniform) sample grid.
VoltageTrace induced_voltage(const MomentTrajectory& moment, const std::vector<Vec3>& receive_profiles,
                             double concentration_volume, const std::vector<double>& filter = {},
                             double mu0 = 4e-7 * std::numbers::pi);

// sqrt(sum |a - b|^2 / sum |b|^2) over all samples and components.
double relative_l2(const std::vector<Vec3>& a, const std::vector<Vec3>& reference);

struct SimulationOptions;

struct PrecessionComparison {
  double relative_error = 0.0;  // L2 error of dm/dt, reduced vs full
  double runtime_ratio = 0.0;   // reduced / full wall time
  double full_seconds = 0.0;
  double reduced_seconds = 0.0;
  MomentTrajectory full;
  MomentTrajectory reduced;
};

// Runs the scenario with the full model and with p1 = p3 = 0.
PrecessionComparison precession_comparison(const ParticleModel& model, const FieldSequence& field,
                                           const SimulationOptions& options);

}  // namespace mnp
