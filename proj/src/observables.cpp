#include "mnp/observables.hpp"

#include <cmath>

#include "mnp/error.hpp"
#include "mnp/simulation.hpp"

namespace mnp {

namespace {

constexpr double kFourPiThird = 4.0 * std::numbers::pi / 3.0;

// balanced-basis degree-1 coefficients
void degree_one(const ShVector& c, ShBasis basis, Complex& cm, Complex& c0, Complex& cp) {
  cm = c(1);
  c0 = c(2);
  cp = c(3);
  if (basis == ShBasis::standard) {
    cm /= sh_basis_scale(1, -1);
    cp /= sh_basis_scale(1, 1);
  }
}

}  // namespace

Vec3 mean_moment_sh(const ShVector& c, double m0, ShBasis basis) {
  if (c.size() < 4) return Vec3::Zero();
  Complex cm, c0, cp;
  degree_one(c, basis, cm, c0, cp);
  // int sin(t) e^{ip} f = -sqrt(2) (4 pi / 3) C^{-1}_1 in the balanced basis
  const Complex xy = -std::sqrt(2.0) * kFourPiThird * 0.5 * (cm + std::conj(cp));
  return m0 * Vec3(xy.real(), xy.imag(), kFourPiThird * c0.real());
}

double moment_imaginary_residue_sh(const ShVector& c, ShBasis basis) {
  if (c.size() < 4) return 0.0;
  Complex cm, c0, cp;
  degree_one(c, basis, cm, c0, cp);
  return std::max(std::abs(c0.imag()), std::abs(cm - std::conj(cp))) * kFourPiThird;
}

Vec3 mean_moment_fv(const TriMesh& mesh, const Eigen::VectorXd& u, double m0, FvMomentRule rule) {
  if (static_cast<std::size_t>(u.size()) != mesh.triangle_count()) throw InvalidInput("state does not match mesh");
  Vec3 s = Vec3::Zero();
  for (std::size_t i = 0; i < mesh.triangle_count(); ++i) {
    const double ui = u(static_cast<Eigen::Index>(i));
    if (rule == FvMomentRule::exact) {
      s += ui * mesh.first_moment[i];
    } else {
      s += ui * mesh.area[i] * mesh.centroid[i];
    }
  }
  return m0 * s;
}

std::vector<Vec3> finite_difference_derivative(const std::vector<double>& t, const std::vector<Vec3>& m) {
  if (t.size() != m.size() || t.size() < 3) throw InvalidInput("need at least three matching samples");
  const std::size_t n = t.size();
  std::vector<Vec3> d(n);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double h0 = t[k] - t[k - 1], h1 = t[k + 1] - t[k];
    d[k] = -h1 / (h0 * (h0 + h1)) * m[k - 1] + (h1 - h0) / (h0 * h1) * m[k] + h0 / (h1 * (h0 + h1)) * m[k + 1];
  }
  {
    const double h0 = t[1] - t[0], h1 = t[2] - t[1];
    d[0] = -(2 * h0 + h1) / (h0 * (h0 + h1)) * m[0] + (h0 + h1) / (h0 * h1) * m[1] - h0 / (h1 * (h0 + h1)) * m[2];
  }
  {
    const double h0 = t[n - 2] - t[n - 3], h1 = t[n - 1] - t[n - 2];
    d[n - 1] = h1 / (h0 * (h0 + h1)) * m[n - 3] - (h0 + h1) / (h0 * h1) * m[n - 2] +
               (2 * h1 + h0) / (h1 * (h0 + h1)) * m[n - 1];
  }
  return d;
}

VoltageTrace induced_voltage(const MomentTrajectory& moment, const std::vector<Vec3>& receive_profiles,
                             double concentration_volume, const std::vector<double>& filter, double mu0) {
  if (moment.moment.size() != moment.times.size()) throw InvalidInput("moment samples do not match times");
  std::vector<Vec3> deriv = moment.derivative;
  if (deriv.empty()) deriv = finite_difference_derivative(moment.times, moment.moment);
  if (deriv.size() != moment.times.size()) throw InvalidInput("derivative samples do not match times");
  const std::size_t n = moment.times.size();
  if (!filter.empty()) {
    if (filter.size() != n) throw InvalidInput("filter kernel must have one tap per sample");
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const double dt0 = moment.times[1] - moment.times[0];
      if (std::abs((moment.times[k + 1] - moment.times[k]) - dt0) > 1e-9 * dt0) {
        throw InvalidInput("filtering needs a uniform sample grid");
      }
    }
  }
  VoltageTrace v;
  v.times = moment.times;
  v.receive_profiles = receive_profiles;
  v.concentration_volume = concentration_volume;
  for (const Vec3& p : receive_profiles) {
    std::vector<double> raw(n);
    for (std::size_t k = 0; k < n; ++k) raw[k] = -mu0 * concentration_volume * p.dot(deriv[k]);
    if (filter.empty()) {
      v.channels.push_back(std::move(raw));
      continue;
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += filter[j] * raw[(k + n - j) % n];
      out[k] = s;
    }
    v.channels.push_back(std::move(out));
  }
  return v;
}

double relative_l2(const std::vector<Vec3>& a, const std::vector<Vec3>& reference) {
  if (a.size() != reference.size()) throw InvalidInput("trajectories have different lengths");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += (a[k] - reference[k]).squaredNorm();
    den += reference[k].squaredNorm();
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

PrecessionComparison precession_comparison(const ParticleModel& model, const FieldSequence& field,
                                           const SimulationOptions& options) {
  SimulationOptions full = options;
  full.precession = true;
  full.compute_derivative = true;
  SimulationOptions reduced = full;
  reduced.precession = false;
  const SimulationResult a = simulate(model, field, full);
  if (a.status == RunStatus::stiffness_failure || a.status == RunStatus::divergence) {
    throw ConvergenceError("full model failed: " + a.message);
  }
  const SimulationResult b = simulate(model, field, reduced);
  if (b.status == RunStatus::stiffness_failure || b.status == RunStatus::divergence) {
    throw ConvergenceError("reduced model failed: " + b.message);
  }
  PrecessionComparison c;
  c.full = a.moments;
  c.reduced = b.moments;
  c.full_seconds = a.wall_seconds;
  c.reduced_seconds = b.wall_seconds;
  c.runtime_ratio = a.wall_seconds > 0.0 ? b.wall_seconds / a.wall_seconds : 0.0;
  c.relative_error = relative_l2(b.moments.derivative, a.moments.derivative);
  return c;
}

}  // namespace mnp
