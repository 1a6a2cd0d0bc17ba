#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mnp/field_model.hpp"
#include "mnp/simulation.hpp"

namespace mnp {

enum class XspaceMode { sinusoidal, pulsed };
std::string to_string(XspaceMode mode);
XspaceMode parse_xspace_mode(const std::string& text);

// FFP path for H_S(x) = Q_G x with Q_G = G diag(-0.5, -0.5, 1).  Fields in
// A/m, gradient in A/m^2, positions in m.
struct FfpTrajectory {
  XspaceMode mode = XspaceMode::sinusoidal;
  double amplitude = 0.02 / (4e-7 * std::numbers::pi);
  double frequency = 25000.0;  // f, or f_pulsed
  double gradient = 7.0 / (4e-7 * std::numbers::pi);
  double pulsed_amplitude = 0.001 / (4e-7 * std::numbers::pi);
  int steps = 40;
  double shift = 1.0 / (4.0 * 2500.0);

  double range() const { return 2.0 * amplitude / gradient; }
  double period() const { return 1.0 / frequency; }
  double x(double t) const;
  double y(double t) const;
  // |dx/dt| at position xbar on a monotone half period (sinusoidal).
  double speed_at(double xbar) const;
  // The N staircase positions (pulsed).
  std::vector<double> levels() const;
  FieldSequence drive() const;
  // Selection field at a point on the x axis.
  Vec3 selection_field(double x) const { return Vec3(-0.5 * gradient * x, 0.0, 0.0); }
  void validate() const;
};

// N cell-centred nodes on (-R, R); odd N puts a node at 0.
std::vector<double> uniform_nodes(double range, std::size_t count);

struct GriddedSignal {
  std::vector<double> nodes;
  std::vector<double> values;
  std::vector<bool> valid;  // false inside the guard band or on flagged intervals
  std::vector<std::string> warnings;
};

// Change of variables on the rising half period centred at `center`
// (x_FFP(center) = 0).  v is interpolated with a monotone cubic, then divided
// by the FFP speed.  Nodes with |x| > guard * R are zeroed and marked invalid.
GriddedSignal grid_sinusoidal(const std::vector<double>& times, const std::vector<double>& voltage,
                              const FfpTrajectory& trajectory, const std::vector<double>& nodes, double center,
                              double guard = 0.95);

struct PulseInterval {
  double start = 0.0;
  double jump = 0.0;
  double end = 0.0;
  int node = 0;       // staircase level active during the interval
  double sign = 1.0;  // +1 for a falling y jump, -1 for a rising one
};

// Intervals [t_y - w, t_y + w] around every y jump with w = half_width * T,
// keeping those that stay inside one staircase plateau.
std::vector<PulseInterval> pulse_intervals(const FfpTrajectory& trajectory, double half_width = 0.2);

// Sample grid resolving the relaxation after each jump.
std::vector<double> pulsed_sample_grid(const FfpTrajectory& trajectory, double half_width = 0.2,
                                       std::size_t points_per_interval = 400);

// g_i = mean over the intervals of level i of sign * (trapezoid of v over
// the interval).  Intervals whose terminal |v| exceeds steady_tolerance times
// their peak |v| are flagged; their values are kept.
GriddedSignal extract_pulsed(const std::vector<double>& times, const std::vector<double>& voltage,
                             const FfpTrajectory& trajectory, const std::vector<PulseInterval>& intervals,
                             double steady_tolerance = 1e-3);

struct KernelEstimate {
  std::vector<double> values;  // kappa_k for circular shift k = 0..N-1
  double spacing = 0.0;        // node pitch in m
  std::vector<std::size_t> zeroed_bins;
  std::vector<double> denominator;  // sum_j |c_hat|^2 per bin
  double imaginary_residue = 0.0;   // max |Im| / max |Re| before dropping Im
  std::size_t phantom_count = 0;

  // Shifts wrapped to [-floor(N/2), ceil(N/2) - 1], ascending.
  std::vector<int> centered_shifts() const;
  std::vector<double> centered_values() const;
};

// Spectral quotient sum_j conj(c_j) g_j / sum_j |c_j|^2.  Bins whose
// denominator falls below epsilon * max are set to zero and reported.
KernelEstimate estimate_kernel(const std::vector<std::vector<double>>& phantoms,
                               const std::vector<std::vector<double>>& signals, double epsilon = 1e-12);

// (c (*) kappa)_k = sum_m kappa_{(k - m) mod N} c_m
std::vector<double> circular_convolve(const std::vector<double>& c, const std::vector<double>& kappa);

// Throws InvalidInput when c is all zero or has mass within guard * N nodes
// of either end.
void check_phantom_support(const std::vector<double>& c, double guard = 0.25);

struct XspaceConfig {
  FfpTrajectory trajectory;
  PhysicalConstants constants;
  double core_diameter = 0.0;  // 0: same as the hydrodynamic diameter
  std::size_t nodes = 101;     // sinusoidal grid
  double guard = 0.95;
  double half_width = 0.2;
  double steady_tolerance = 1e-3;
  double spectral_epsilon = 1e-12;
  std::size_t samples_per_half_period = 2001;
  std::size_t points_per_interval = 400;
  std::optional<Discretization> discretization;  // default sh:24 (sinusoidal) / sh:36 (pulsed)
  IntegratorConfig integrator;
  std::filesystem::path mesh_cache;
  int workers = 1;
};

XspaceConfig default_xspace_config(XspaceMode mode);
std::vector<double> xspace_nodes(const XspaceConfig& config);
Discretization xspace_discretization(const XspaceConfig& config);

// Gridded signal of a unit point source at node `node` (Brownian model).
GriddedSignal delta_signal(const XspaceConfig& config, const ParticleModel& model, std::size_t node);
// Superposition of delta signals with the weights c.
GriddedSignal phantom_signal(const XspaceConfig& config, const ParticleModel& model, const std::vector<double>& c);

struct KernelResult {
  double hydro_diameter = 0.0;
  double core_diameter = 0.0;
  KernelEstimate estimate;
  std::vector<double> positions;   // m, centred shifts times pitch
  std::vector<double> normalized;  // centred kappa / kappa at the peak of |kappa|
  double raw_peak = 0.0;
  double fwhm = 0.0;        // m; NaN if a half-maximum crossing is missing
  double peak_shift = 0.0;  // m, parabolic vertex of the |kappa| peak
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

// FWHM by linear interpolation of the half-maximum crossings around the peak.
double kernel_fwhm(const std::vector<double>& positions, const std::vector<double>& values);
double kernel_peak_shift(const std::vector<double>& positions, const std::vector<double>& values);

KernelResult kernel_for_diameter(const XspaceConfig& config, double hydro_diameter);
std::vector<KernelResult> kernel_study(const XspaceConfig& config, const std::vector<double>& hydro_diameters);

}  // namespace mnp
