#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "mnp/error.hpp"
#include "mnp/field_model.hpp"

using namespace mnp;

namespace {
constexpr double kMu0 = 4e-7 * std::numbers::pi;
}

TEST_CASE("Neel parameters") {
  PhysicalConstants c;
  c.anisotropy = 625.0;
  const ParticleModel m = neel_params(c);
  const double g = 1.75e11 / (1.0 + 0.01);
  CHECK(m.p1 == doctest::Approx(g * kMu0));
  CHECK(m.p2 == doctest::Approx(g * 0.1 * kMu0));
  CHECK(m.p3 == doctest::Approx(2.0 * g * 625.0 / 474000.0));
  CHECK(m.p4 == doctest::Approx(0.1 * m.p3));
  const double vc = std::numbers::pi * std::pow(20e-9, 3) / 6.0;
  CHECK(m.tau == doctest::Approx(vc * 474000.0 / (2.0 * 1.38064852e-23 * 293.0 * g * 0.1)));
  CHECK(m.m0 == doctest::Approx(474000.0 * vc));
}

TEST_CASE("zero anisotropy removes the axis terms") {
  const ParticleModel m = neel_params(PhysicalConstants{});
  CHECK(m.p3 == 0.0);
  CHECK(m.p4 == 0.0);
}

TEST_CASE("zero damping is rejected") {
  PhysicalConstants c;
  c.damping = 0.0;
  CHECK_THROWS_AS(neel_params(c), InvalidParameter);
  c = PhysicalConstants{};
  c.hydro_diameter = 10e-9;
  CHECK_THROWS_AS(brown_params(c), InvalidParameter);
  c = PhysicalConstants{};
  c.anisotropy = -1.0;
  CHECK_THROWS_AS(neel_params(c), InvalidParameter);
}

TEST_CASE("Brownian parameters") {
  PhysicalConstants c;
  const ParticleModel m = brown_params(c);
  CHECK(m.p1 == 0.0);
  CHECK(m.p3 == 0.0);
  CHECK(m.p4 == 0.0);
  CHECK(m.tau == doctest::Approx(3.106e-8).epsilon(1e-3));
  c.viscosity *= 2.0;
  const ParticleModel m2 = brown_params(c);
  CHECK(m2.tau == doctest::Approx(2.0 * m.tau));
  CHECK(m2.p2 == doctest::Approx(0.5 * m.p2));
}

TEST_CASE("advection field special cases") {
  PhysicalConstants c;
  c.anisotropy = 625.0;
  const ParticleModel m = neel_params(c);
  const ParticleModel iso = neel_params(PhysicalConstants{});
  CHECK(advection_field(Vec3::UnitX(), Vec3::Zero(), Vec3::UnitZ(), iso).norm() == 0.0);
  // m parallel to H and perpendicular to n
  CHECK(advection_field(Vec3::UnitX(), 1000.0 * Vec3::UnitX(), Vec3::UnitZ(), m).norm() < 1e-9);
  const double H0 = 1000.0;
  const Vec3 b = advection_field(Vec3::UnitX(), H0 * Vec3::UnitZ(), Vec3::UnitY(), m);
  CHECK(b.x() == doctest::Approx(0.0));
  CHECK(b.y() == doctest::Approx(m.p1 * H0));
  CHECK(b.z() == doctest::Approx(m.p2 * H0));
}

TEST_CASE("advection field is tangent and splits into its parts") {
  PhysicalConstants c;
  c.anisotropy = 3000.0;
  const ParticleModel m = neel_params(c);
  std::mt19937 gen(3);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 200; ++i) {
    const Vec3 x = Vec3(nd(gen), nd(gen), nd(gen)).normalized();
    const Vec3 n = Vec3(nd(gen), nd(gen), nd(gen)).normalized();
    const Vec3 H = 1e4 * Vec3(nd(gen), nd(gen), nd(gen));
    const Vec3 b = advection_field(x, H, n, m);
    CHECK(std::abs(b.dot(x)) <= 1e-12 * b.norm());
    const Vec3 parts = precession_field(x, H, n, m) + alignment_field(x, H, n, m);
    CHECK((b - parts).norm() <= 1e-12 * b.norm());
    CHECK((advection_field(x, H, n, m.without_precession()) - alignment_field(x, H, n, m)).norm() <=
          1e-12 * b.norm());
  }
}

TEST_CASE("advection field rate matches a finite difference") {
  PhysicalConstants c;
  c.anisotropy = 1000.0;
  const ParticleModel m = neel_params(c);
  const Vec3 x = Vec3(0.2, -0.5, 0.8).normalized();
  auto H = [](double t) { return Vec3(1e4 * std::sin(t), 3e3 * std::cos(t), 500.0); };
  auto n = [](double t) { return Vec3(std::cos(t), std::sin(t), 0.0); };
  const double t = 0.7, h = 1e-5;
  const Vec3 fd = (advection_field(x, H(t + h), n(t + h), m) - advection_field(x, H(t - h), n(t - h), m)) / (2 * h);
  const Vec3 dH(1e4 * std::cos(t), -3e3 * std::sin(t), 0.0);
  const Vec3 dn(-std::sin(t), std::cos(t), 0.0);
  const Vec3 an = advection_field_rate(x, H(t), dH, n(t), dn, m);
  CHECK((fd - an).norm() <= 1e-7 * an.norm());
}

TEST_CASE("sinusoidal drive") {
  const FieldSequence s = sinusoidal_sequence(0.02 / kMu0, 25000.0, Vec3::Zero());
  CHECK(s.field(0.0).norm() == 0.0);
  CHECK(s.period() == doctest::Approx(4e-5));
  CHECK(s.field(1e-5).x() == doctest::Approx(0.02 / kMu0));
  const Vec3 off(1.0, 2.0, 3.0);
  CHECK((s.with_offset(off).field(1e-5) - s.field(1e-5) - off).norm() < 1e-9);
}

TEST_CASE("staircase endpoints") {
  const double T = 1.0 / 2500.0, dt = T / 4.0;
  const int N = 40;
  CHECK(staircase(dt + 1e-12, -1.0, 1.0, T, N, dt) == doctest::Approx(-1.0));
  CHECK(staircase(dt + (N - 1) * T + 1e-9, -1.0, 1.0, T, N, dt) == doctest::Approx(1.0));
  CHECK(staircase_index(0.0, T, N, dt) == 0);
  CHECK(staircase_index(dt + 2.5 * T, T, N, dt) == 2);
  CHECK(staircase_index(100.0 * T, T, N, dt) == N - 1);
}

TEST_CASE("pulsed drive") {
  const double A = 0.02 / kMu0, Ap = 0.001 / kMu0, f = 2500.0, T = 1.0 / f;
  const FieldSequence s = pulsed_sequence(A, Ap, f, 40, T / 4.0, Vec3::Zero());
  CHECK(s.field(0.3 * T).y() == doctest::Approx(Ap));
  CHECK(s.field(0.7 * T).y() == doctest::Approx(-Ap));
  // the last plateau lasts a full period
  CHECK(s.horizon() == doctest::Approx(T / 4.0 + 40.0 * T));
  // one-sided limits at a pulse flip
  CHECK(s.field(0.5 * T, Side::left).y() == doctest::Approx(Ap));
  CHECK(s.field(0.5 * T, Side::right).y() == doctest::Approx(-Ap));
  const auto bp = s.breakpoints(0.0, 2.0 * T);
  CHECK(!bp.empty());
  CHECK(std::is_sorted(bp.begin(), bp.end()));
  CHECK_THROWS_AS(pulsed_sequence(A, Ap, f, 1, T / 4.0, Vec3::Zero()).field(0.0), InvalidParameter);
  CHECK_THROWS_AS(pulsed_sequence(A, Ap, f, 40, 2.0 * T, Vec3::Zero()).field(0.0), InvalidParameter);
}

TEST_CASE("rotating easy axis") {
  EasyAxis ax;
  ax.axis = Vec3::UnitX();
  ax.rotation_axis = Vec3::UnitZ();
  ax.rate = 2.0;
  const FieldSequence s(StaticDrive{}, Vec3::Zero(), ax);
  const double t = 0.3;
  CHECK((s.easy_axis(t) - Vec3(std::cos(2 * t), std::sin(2 * t), 0.0)).norm() < 1e-12);
  CHECK((s.easy_axis_rate(t) - 2.0 * Vec3(-std::sin(2 * t), std::cos(2 * t), 0.0)).norm() < 1e-12);
}
