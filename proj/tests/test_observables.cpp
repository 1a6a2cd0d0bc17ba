#include <cmath>
#include <numbers>

#include "doctest.h"

#include "mnp/error.hpp"
#include "mnp/observables.hpp"
#include "mnp/simulation.hpp"
#include "mnp/validation/oracles.hpp"

using namespace mnp;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kMu0 = 4e-7 * kPi;

Vec3 quadrature_moment(const ShVector& c, int n_max) {
  const auto rule = oracle::sphere_rule(2 * n_max + 4, 4 * n_max + 8);
  Vec3 m = Vec3::Zero();
  for (int k = 0; k < 3; ++k) {
    m(k) = oracle::integrate(rule, [&](const Vec3& x) { return x(k) * oracle::synthesize(c, n_max, x).real(); });
  }
  return m;
}
}  // namespace

TEST_CASE("SH moment read-out") {
  ShVector c = sh_initial_uniform(4).coefficients;
  CHECK(mean_moment_sh(c, 1.0).norm() == 0.0);
  c(sh_index(1, 0)) = 3.0 / (8.0 * kPi);
  CHECK(mean_moment_sh(c, 1.0).z() == doctest::Approx(0.5));
  CHECK(quadrature_moment(c, 4).z() == doctest::Approx(0.5));

  const ShVector r = oracle::random_real_coefficients(6, 12);
  const Vec3 m = mean_moment_sh(r, 2.0);
  CHECK((m - 2.0 * quadrature_moment(r, 6)).norm() < 1e-12);
  CHECK(moment_imaginary_residue_sh(r) < 1e-10);
}

TEST_CASE("FV moment read-out") {
  const auto mesh = icosphere(3);
  CHECK(mean_moment_fv(fv_initial_uniform(mesh), 1.0).norm() < 1e-9);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh->triangle_count()));
  u(17) = 1.0 / mesh->area[17];
  for (FvMomentRule rule : {FvMomentRule::exact, FvMomentRule::centroid}) {
    const Vec3 m = mean_moment_fv(*mesh, u, 1.0, rule);
    CHECK(m.normalized().dot(mesh->centroid[17]) > 1.0 - 1e-12);
  }
  // the exact rule integrates m over the cell
  CHECK((mean_moment_fv(*mesh, u, 1.0) - mesh->first_moment[17] / mesh->area[17]).norm() < 1e-14);
}

TEST_CASE("induced voltage of a harmonic moment") {
  const double f = 1000.0, k = 0.7, cv = 2.5;
  MomentTrajectory m;
  m.times = uniform_samples(0.0, 1.0 / f, 201);
  for (double t : m.times) {
    m.moment.emplace_back(std::sin(2 * kPi * f * t), 0.0, 0.0);
    m.derivative.emplace_back(2 * kPi * f * std::cos(2 * kPi * f * t), 0.0, 0.0);
  }
  const VoltageTrace v = induced_voltage(m, {k * Vec3::UnitX(), Vec3::UnitY()}, cv);
  REQUIRE(v.channels.size() == 2);
  for (std::size_t i = 0; i < m.times.size(); ++i) {
    CHECK(v.channels[0][i] == doctest::Approx(-kMu0 * cv * k * 2 * kPi * f * std::cos(2 * kPi * f * m.times[i])));
    CHECK(v.channels[1][i] == 0.0);
  }
  const VoltageTrace v2 = induced_voltage(m, {k * Vec3::UnitX()}, 2.0 * cv);
  for (std::size_t i = 0; i < m.times.size(); ++i) CHECK(v2.channels[0][i] == 2.0 * v.channels[0][i]);

  // identity filter tap leaves the signal unchanged
  std::vector<double> delta(m.times.size(), 0.0);
  delta[0] = 1.0;
  const VoltageTrace vf = induced_voltage(m, {k * Vec3::UnitX()}, cv, delta);
  for (std::size_t i = 0; i < m.times.size(); ++i) CHECK(vf.channels[0][i] == doctest::Approx(v.channels[0][i]));
}

TEST_CASE("constant moment induces nothing") {
  MomentTrajectory m;
  m.times = uniform_samples(0.0, 1.0, 11);
  m.moment.assign(11, Vec3(1.0, 2.0, 3.0));
  const VoltageTrace v = induced_voltage(m, {Vec3::UnitX()}, 1.0);
  for (double x : v.channels[0]) CHECK(std::abs(x) < 1e-15);
}

TEST_CASE("finite-difference derivative") {
  const auto t = uniform_samples(0.0, 1.0, 101);
  std::vector<Vec3> m;
  for (double s : t) m.emplace_back(s * s, std::sin(s), 1.0);
  const auto d = finite_difference_derivative(t, m);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(d[i].x() == doctest::Approx(2 * t[i]).epsilon(1e-9).scale(1e-9));
    CHECK(std::abs(d[i].y() - std::cos(t[i])) < 1e-3);
  }
}

TEST_CASE("derivative from the operator matches finite differences") {
  PhysicalConstants c;
  c.anisotropy = 625.0;
  const FieldSequence f = sinusoidal_sequence(0.02 / kMu0, 25000.0, Vec3::Zero(), Vec3(1.0, 1.0, 0.0).normalized());
  SimulationOptions o;
  o.discretization = ShDiscretization{12};
  // sample after a settling quarter period; the start-up transient is too sharp for finite differences
  o.integrator.t_end = 1.25 * f.period();
  o.integrator.samples = uniform_samples(0.25 * f.period(), 1.25 * f.period(), 2001);
  const SimulationResult r = simulate(neel_params(c), f, o);
  REQUIRE(r.status == RunStatus::ok);
  const auto fd = finite_difference_derivative(r.moments.times, r.moments.moment);
  std::vector<Vec3> a(r.moments.derivative.begin() + 1, r.moments.derivative.end() - 1);
  std::vector<Vec3> b(fd.begin() + 1, fd.end() - 1);
  CHECK(relative_l2(b, a) < 1e-3);
}

TEST_CASE("relative L2") {
  const std::vector<Vec3> a = {Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const std::vector<Vec3> b = {Vec3(1, 0, 0), Vec3(0, 2, 0)};
  CHECK(relative_l2(b, b) == 0.0);
  CHECK(relative_l2(a, b) == doctest::Approx(1.0 / std::sqrt(5.0)));
  CHECK_THROWS_AS(relative_l2(a, {Vec3::Zero()}), InvalidInput);
}

TEST_CASE("precession comparison") {
  const FieldSequence f = sinusoidal_sequence(0.02 / kMu0, 25000.0, Vec3(0.003, 0.0, 0.0) / kMu0);
  SimulationOptions o;
  o.discretization = ShDiscretization{12};
  o.integrator.t_end = 0.5 * f.period();
  o.integrator.samples = uniform_samples(0.0, o.integrator.t_end, 101);
  SUBCASE("Brownian particles have no precession") {
    const PrecessionComparison p = precession_comparison(brown_params(PhysicalConstants{}), f, o);
    CHECK(p.relative_error == 0.0);
  }
  SUBCASE("static isotropic equilibrium is unaffected") {
    const ParticleModel model = neel_params(PhysicalConstants{});
    const FieldSequence s = static_sequence(Vec3(2000.0, 1000.0, -500.0));
    SimulationOptions so = o;
    so.integrator.t_end = 40.0 * model.tau;
    so.integrator.samples = {so.integrator.t_end};
    const PrecessionComparison p = precession_comparison(model, s, so);
    CHECK((p.full.moment.back() - p.reduced.moment.back()).norm() < 1e-6 * p.full.moment.back().norm());
  }
}

TEST_CASE("rotational equivariance of SH trajectories") {
  PhysicalConstants c;
  c.anisotropy = 1000.0;
  const ParticleModel model = neel_params(c);
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Vec3(1.0, 2.0, 2.0).normalized()).toRotationMatrix();
  const Vec3 H0(3000.0, 0.0, 1000.0), n0 = Vec3(0.0, 0.6, 0.8);
  SimulationOptions o;
  o.discretization = ShDiscretization{14};
  o.integrator.t_end = 5.0 * model.tau;
  o.integrator.samples = uniform_samples(0.0, o.integrator.t_end, 11);
  const SimulationResult a = simulate(model, static_sequence(H0, n0), o);
  const SimulationResult b = simulate(model, static_sequence(R * H0, R * n0), o);
  REQUIRE(a.status == RunStatus::ok);
  REQUIRE(b.status == RunStatus::ok);
  std::vector<Vec3> ra;
  for (const Vec3& m : a.moments.moment) ra.push_back(R * m);
  CHECK(relative_l2(b.moments.moment, ra) < 1e-6);
}
