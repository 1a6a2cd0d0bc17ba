#pragma once

#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mnp {

using Vec3 = Eigen::Vector3d;

enum class RotationMode { neel, brown };

std::string to_string(RotationMode mode);

// Physical constants.  Fields are in A/m, so an amplitude written as
// "x T/mu0" is x / mu0 here.  gyromagnetic and damping have no
// published values; they are configuration defaults.
struct PhysicalConstants {
  double mu0 = 4e-7 * std::numbers::pi;
  double boltzmann = 1.38064852e-23;
  double temperature = 293.0;
  double saturation_magnetization = 474000.0;
  double core_diameter = 20e-9;
  double hydro_diameter = 20e-9;
  double viscosity = 1e-5;
  double anisotropy = 0.0;
  double gyromagnetic = 1.75e11;
  double damping = 0.1;
};

struct ParticleModel {
  RotationMode mode = RotationMode::neel;
  PhysicalConstants constants;
  double p1 = 0, p2 = 0, p3 = 0, p4 = 0;
  double tau = 0;
  double m0 = 0;
  double core_volume = 0;
  double hydro_volume = 0;

  double diffusion() const { return 1.0 / (2.0 * tau); }
  bool has_precession() const { return p1 != 0.0 || p3 != 0.0; }
  // Same model with p1 = p3 = 0.
  ParticleModel without_precession() const;
};

ParticleModel neel_params(const PhysicalConstants& c);
ParticleModel brown_params(const PhysicalConstants& c);
ParticleModel make_model(RotationMode mode, const PhysicalConstants& c);

// b = p1 H x m + p2 (m x H) x m + p3 (n.m) n x m + p4 (n.m)(m x n) x m
Vec3 advection_field(const Vec3& m, const Vec3& H, const Vec3& n, const ParticleModel& model);
Vec3 precession_field(const Vec3& m, const Vec3& H, const Vec3& n, const ParticleModel& model);
Vec3 alignment_field(const Vec3& m, const Vec3& H, const Vec3& n, const ParticleModel& model);

// Time derivative of b at fixed m for H' = dH/dt and n' = dn/dt.
Vec3 advection_field_rate(const Vec3& m, const Vec3& H, const Vec3& dH, const Vec3& n, const Vec3& dn,
                          const ParticleModel& model);

// Which one-sided limit to take at a discontinuity of the drive.
enum class Side { exact, left, right };

struct StaticDrive {};

struct SinusoidalDrive {
  double amplitude = 0.02 / (4e-7 * std::numbers::pi);
  double frequency = 25000.0;
  Vec3 direction = Vec3::UnitX();
};

// A * staircase(t) e1 + A_pulsed * sign(sin(2 pi f_pulsed t)) e2
struct PulsedDrive {
  double amplitude = 0.02 / (4e-7 * std::numbers::pi);
  double pulsed_amplitude = 0.001 / (4e-7 * std::numbers::pi);
  double pulsed_frequency = 2500.0;
  int steps = 40;
  double shift = 1.0 / (4.0 * 2500.0);
};

using Drive = std::variant<StaticDrive, SinusoidalDrive, PulsedDrive>;

// Easy axis n(t) = R(rate * t) n0, rotating about rotation_axis.  rate = 0
// gives a fixed axis.
struct EasyAxis {
  Vec3 axis = Vec3::UnitZ();
  Vec3 rotation_axis = Vec3::UnitZ();
  double rate = 0.0;
};

// staircase phi_{[a,b],T,N}(t) with the step index clamped to [0, N-1]
double staircase(double t, double a, double b, double period, int steps, double shift);
int staircase_index(double t, double period, int steps, double shift);

class FieldSequence {
public:
  FieldSequence() = default;
  FieldSequence(Drive drive, const Vec3& offset, const EasyAxis& axis);

  Vec3 drive_field(double t, Side side = Side::exact) const;
  Vec3 field(double t, Side side = Side::exact) const { return drive_field(t, side) + offset_; }
  Vec3 field_rate(double t) const;
  Vec3 easy_axis(double t) const;
  Vec3 easy_axis_rate(double t) const;

  // Period of the drive (StaticDrive reports 1 s).
  double period() const;
  // Natural simulation length: one period, or the full staircase for pulsed.
  double horizon() const;
  // Times in [t0, t1] where the drive jumps.
  std::vector<double> breakpoints(double t0, double t1) const;

  const Drive& drive() const { return drive_; }
  const Vec3& offset() const { return offset_; }
  const EasyAxis& axis() const { return axis_; }
  FieldSequence with_offset(const Vec3& offset) const;
  FieldSequence with_axis(const EasyAxis& axis) const;

private:
  Drive drive_ = StaticDrive{};
  Vec3 offset_ = Vec3::Zero();
  EasyAxis axis_;
};

FieldSequence static_sequence(const Vec3& H, const Vec3& n = Vec3::UnitZ());
FieldSequence sinusoidal_sequence(double amplitude, double frequency, const Vec3& offset,
                                  const Vec3& n = Vec3::UnitZ());
FieldSequence pulsed_sequence(double amplitude, double pulsed_amplitude, double pulsed_frequency, int steps,
                              double shift, const Vec3& offset, const Vec3& n = Vec3::UnitZ());

}  // namespace mnp
