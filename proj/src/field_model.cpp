#include "mnp/field_model.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "mnp/error.hpp"

namespace mnp {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter(std::string(name) + " must be positive");
}

ParticleModel base_model(RotationMode mode, const PhysicalConstants& c) {
  require_positive(c.mu0, "mu0");
  require_positive(c.boltzmann, "boltzmann");
  require_positive(c.temperature, "temperature");
  require_positive(c.saturation_magnetization, "saturation_magnetization");
  require_positive(c.core_diameter, "core_diameter");
  require_positive(c.hydro_diameter, "hydro_diameter");
  if (!(c.anisotropy >= 0.0) || !std::isfinite(c.anisotropy)) {
    throw InvalidParameter("anisotropy must be non-negative");
  }
  if (c.hydro_diameter < c.core_diameter) throw InvalidParameter("hydro_diameter must be >= core_diameter");
  ParticleModel m;
  m.mode = mode;
  m.constants = c;
  m.core_volume = std::numbers::pi * std::pow(c.core_diameter, 3) / 6.0;
  m.hydro_volume = std::numbers::pi * std::pow(c.hydro_diameter, 3) / 6.0;
  m.m0 = c.saturation_magnetization * m.core_volume;
  return m;
}

}  // namespace

std::string to_string(RotationMode mode) { return mode == RotationMode::neel ? "neel" : "brown"; }

ParticleModel ParticleModel::without_precession() const {
  ParticleModel m = *this;
  m.p1 = 0.0;
  m.p3 = 0.0;
  return m;
}

ParticleModel neel_params(const PhysicalConstants& c) {
  require_positive(c.gyromagnetic, "gyromagnetic");
  require_positive(c.damping, "damping");
  ParticleModel m = base_model(RotationMode::neel, c);
  const double g = c.gyromagnetic / (1.0 + c.damping * c.damping);
  m.p1 = g * c.mu0;
  m.p2 = g * c.damping * c.mu0;
  m.p3 = 2.0 * g * c.anisotropy / c.saturation_magnetization;
  m.p4 = 2.0 * g * c.damping * c.anisotropy / c.saturation_magnetization;
  m.tau = m.core_volume * c.saturation_magnetization / (2.0 * c.boltzmann * c.temperature * g * c.damping);
  require_positive(m.tau, "relaxation time");
  return m;
}

ParticleModel brown_params(const PhysicalConstants& c) {
  require_positive(c.viscosity, "viscosity");
  ParticleModel m = base_model(RotationMode::brown, c);
  m.p2 = c.mu0 * m.core_volume * c.saturation_magnetization / (6.0 * c.viscosity * m.hydro_volume);
  m.tau = 3.0 * m.hydro_volume * c.viscosity / (c.boltzmann * c.temperature);
  require_positive(m.tau, "relaxation time");
  return m;
}

ParticleModel make_model(RotationMode mode, const PhysicalConstants& c) {
  return mode == RotationMode::neel ? neel_params(c) : brown_params(c);
}

Vec3 precession_field(const Vec3& m, const Vec3& H, const Vec3& n, const ParticleModel& p) {
  return p.p1 * H.cross(m) + p.p3 * n.dot(m) * n.cross(m);
}

Vec3 alignment_field(const Vec3& m, const Vec3& H, const Vec3& n, const ParticleModel& p) {
  return p.p2 * m.cross(H).cross(m) + p.p4 * n.dot(m) * m.cross(n).cross(m);
}

Vec3 advection_field(const Vec3& m, const Vec3& H, const Vec3& n, const ParticleModel& p) {
  return precession_field(m, H, n, p) + alignment_field(m, H, n, p);
}

Vec3 advection_field_rate(const Vec3& m, const Vec3& H, const Vec3& dH, const Vec3& n, const Vec3& dn,
                          const ParticleModel& p) {
  (void)H;
  const double nm = n.dot(m);
  const double dnm = dn.dot(m);
  return p.p1 * dH.cross(m) + p.p2 * m.cross(dH).cross(m) + p.p3 * (dnm * n.cross(m) + nm * dn.cross(m)) +
         p.p4 * (dnm * m.cross(n).cross(m) + nm * m.cross(dn).cross(m));
}

int staircase_index(double t, double period, int steps, double shift) {
  const double k = std::floor((t - shift) / period);
  if (k < 0.0) return 0;
  if (k > steps - 1) return steps - 1;
  return static_cast<int>(k);
}

double staircase(double t, double a, double b, double period, int steps, double shift) {
  return (b - a) / (steps - 1) * staircase_index(t, period, steps, shift) + a;
}

FieldSequence::FieldSequence(Drive drive, const Vec3& offset, const EasyAxis& axis)
    : drive_(std::move(drive)), offset_(offset), axis_(axis) {
  if (std::abs(axis_.axis.norm() - 1.0) > 1e-12) throw InvalidParameter("easy axis must be a unit vector");
  if (axis_.rate != 0.0 && std::abs(axis_.rotation_axis.norm() - 1.0) > 1e-12) {
    throw InvalidParameter("easy-axis rotation axis must be a unit vector");
  }
  if (const auto* s = std::get_if<SinusoidalDrive>(&drive_)) {
    require_positive(s->amplitude, "amplitude");
    require_positive(s->frequency, "frequency");
  } else if (const auto* p = std::get_if<PulsedDrive>(&drive_)) {
    require_positive(p->amplitude, "amplitude");
    require_positive(p->pulsed_amplitude, "pulsed_amplitude");
    require_positive(p->pulsed_frequency, "pulsed_frequency");
    if (p->steps < 2) throw InvalidParameter("pulsed steps must be >= 2");
    if (!(p->shift > 0.0 && p->shift < 1.0 / p->pulsed_frequency)) {
      throw InvalidParameter("pulsed shift must lie in (0, T_pulsed)");
    }
  }
}

Vec3 FieldSequence::drive_field(double t, Side side) const {
  if (const auto* s = std::get_if<SinusoidalDrive>(&drive_)) {
    return s->amplitude * std::sin(2.0 * std::numbers::pi * s->frequency * t) * s->direction;
  }
  if (const auto* p = std::get_if<PulsedDrive>(&drive_)) {
    const double period = 1.0 / p->pulsed_frequency;
    const double nudge = 1e-9 * period;
    if (side == Side::left) t -= nudge;
    if (side == Side::right) t += nudge;
    const double x = p->amplitude * staircase(t, -1.0, 1.0, period, p->steps, p->shift);
    // sign(sin(2 pi f t)) with sign(0) = +1
    const double half = 2.0 * p->pulsed_frequency * t;
    const double k = std::floor(half);
    const double sign = (half == k || std::fmod(k, 2.0) == 0.0) ? 1.0 : -1.0;
    return Vec3(x, p->pulsed_amplitude * sign, 0.0);
  }
  return Vec3::Zero();
}

Vec3 FieldSequence::field_rate(double t) const {
  if (const auto* s = std::get_if<SinusoidalDrive>(&drive_)) {
    const double w = 2.0 * std::numbers::pi * s->frequency;
    return s->amplitude * w * std::cos(w * t) * s->direction;
  }
  return Vec3::Zero();
}

Vec3 FieldSequence::easy_axis(double t) const {
  if (axis_.rate == 0.0) return axis_.axis;
  const Eigen::AngleAxisd rot(axis_.rate * t, axis_.rotation_axis);
  return (rot * axis_.axis).normalized();
}

Vec3 FieldSequence::easy_axis_rate(double t) const {
  if (axis_.rate == 0.0) return Vec3::Zero();
  return axis_.rate * axis_.rotation_axis.cross(easy_axis(t));
}

double FieldSequence::period() const {
  if (const auto* s = std::get_if<SinusoidalDrive>(&drive_)) return 1.0 / s->frequency;
  if (const auto* p = std::get_if<PulsedDrive>(&drive_)) return 1.0 / p->pulsed_frequency;
  return 1.0;
}

double FieldSequence::horizon() const {
  if (const auto* p = std::get_if<PulsedDrive>(&drive_)) return p->shift + p->steps / p->pulsed_frequency;
  return period();
}

std::vector<double> FieldSequence::breakpoints(double t0, double t1) const {
  std::vector<double> out;
  const auto* p = std::get_if<PulsedDrive>(&drive_);
  if (!p) return out;
  const double period = 1.0 / p->pulsed_frequency;
  for (int k = 1; k < p->steps; ++k) {
    const double t = p->shift + k * period;
    if (t > t0 && t < t1) out.push_back(t);
  }
  const long first = static_cast<long>(std::floor(2.0 * p->pulsed_frequency * t0));
  for (long k = std::max(first, 1L);; ++k) {
    const double t = k * period / 2.0;
    if (t >= t1) break;
    if (t > t0) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

FieldSequence FieldSequence::with_offset(const Vec3& offset) const {
  FieldSequence s = *this;
  s.offset_ = offset;
  return s;
}

FieldSequence FieldSequence::with_axis(const EasyAxis& axis) const { return FieldSequence(drive_, offset_, axis); }

FieldSequence static_sequence(const Vec3& H, const Vec3& n) {
  EasyAxis axis;
  axis.axis = n;
  return FieldSequence(StaticDrive{}, H, axis);
}

FieldSequence sinusoidal_sequence(double amplitude, double frequency, const Vec3& offset, const Vec3& n) {
  SinusoidalDrive d;
  d.amplitude = amplitude;
  d.frequency = frequency;
  EasyAxis axis;
  axis.axis = n;
  return FieldSequence(d, offset, axis);
}

FieldSequence pulsed_sequence(double amplitude, double pulsed_amplitude, double pulsed_frequency, int steps,
                              double shift, const Vec3& offset, const Vec3& n) {
  PulsedDrive d;
  d.amplitude = amplitude;
  d.pulsed_amplitude = pulsed_amplitude;
  d.pulsed_frequency = pulsed_frequency;
  d.steps = steps;
  d.shift = shift;
  EasyAxis axis;
  axis.axis = n;
  return FieldSequence(d, offset, axis);
}

}  // namespace mnp
