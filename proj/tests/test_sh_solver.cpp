#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "mnp/error.hpp"
#include "mnp/observables.hpp"
#include "mnp/sh_solver.hpp"
#include "mnp/simulation.hpp"
#include "mnp/validation/oracles.hpp"

using namespace mnp;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kMu0 = 4e-7 * kPi;

ParticleModel aniso_model(double K = 2000.0) {
  PhysicalConstants c;
  c.anisotropy = K;
  return neel_params(c);
}

// value of entry (i, j), zero when absent
Complex entry(const ShMatrix& m, int i, int j) { return m.coeff(i, j); }
}  // namespace

TEST_CASE("flattened index") {
  CHECK(sh_index(0, 0) == 0);
  CHECK(sh_index(1, -1) == 1);
  CHECK(sh_index(1, 0) == 2);
  CHECK(sh_index(1, 1) == 3);
  for (int r = 0; r <= 60; ++r) {
    for (int q = -r; q <= r; ++q) {
      const auto [rr, qq] = sh_unindex(sh_index(r, q));
      CHECK_EQ(rr, r);
      CHECK_EQ(qq, q);
    }
  }
  CHECK(sh_size(60) == 61 * 61);
  CHECK_THROWS_AS(sh_index(2, 3), OutOfRange);
  CHECK_THROWS_AS(sh_unindex(-1), OutOfRange);
}

TEST_CASE("uniform initial state") {
  const ShState s = sh_initial_uniform(10);
  CHECK(s.coefficients.size() == sh_size(10));
  CHECK(s.coefficients(0).real() == doctest::Approx(1.0 / (4.0 * kPi)));
  CHECK(s.coefficients.tail(s.coefficients.size() - 1).norm() == 0.0);
  const Vec3 p = Vec3(0.3, -0.2, 0.9).normalized();
  CHECK(std::abs(oracle::synthesize(s.coefficients, 10, p) - 1.0 / (4.0 * kPi)) < 1e-15);
  const auto rule = oracle::sphere_rule(12, 24);
  const auto mass = oracle::integrate_complex(rule, [&](const Vec3& x) { return oracle::synthesize(s.coefficients, 10, x); });
  CHECK(std::abs(mass - 1.0) < 1e-12);
}

TEST_CASE("row (0,0) vanishes") {
  const ShOperator op(8, aniso_model());
  std::mt19937 gen(1);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 5; ++k) {
    const Vec3 H = 1e4 * Vec3(nd(gen), nd(gen), nd(gen));
    const Vec3 n = Vec3(nd(gen), nd(gen), nd(gen)).normalized();
    const ShMatrix m = op.assemble(H, n);
    for (int j = 0; j < m.cols(); ++j) CHECK(std::abs(entry(m, 0, j)) == 0.0);
  }
}

TEST_CASE("pure diffusion spectrum") {
  const ParticleModel model = neel_params(PhysicalConstants{});
  const ShMatrix m = assemble_sh_matrix(12, Vec3::Zero(), Vec3::UnitZ(), model);
  for (int k = 0; k < m.outerSize(); ++k) {
    for (ShMatrix::InnerIterator it(m, k); it; ++it) {
      if (it.row() == it.col()) {
        const int r = sh_unindex(static_cast<int>(it.row())).first;
        CHECK(std::abs(it.value() - Complex(-r * (r + 1.0) / (2.0 * model.tau), 0.0)) <= 1e-9 * std::abs(it.value()) + 1e-300);
      } else {
        CHECK(std::abs(it.value()) == 0.0);
      }
    }
  }
}

TEST_CASE("axial field and axis keep q") {
  const ShMatrix m = assemble_sh_matrix(10, 5000.0 * Vec3::UnitZ(), Vec3::UnitZ(), aniso_model());
  for (int k = 0; k < m.outerSize(); ++k) {
    for (ShMatrix::InnerIterator it(m, k); it; ++it) {
      if (std::abs(it.value()) == 0.0) continue;
      CHECK(sh_unindex(static_cast<int>(it.row())).second == sh_unindex(static_cast<int>(it.col())).second);
    }
  }
}

TEST_CASE("stencil width") {
  const ShOperator op(10, aniso_model());
  const ShMatrix& p = op.pattern();
  for (int k = 0; k < p.outerSize(); ++k) {
    for (ShMatrix::InnerIterator it(p, k); it; ++it) {
      const auto [r, q] = sh_unindex(static_cast<int>(it.row()));
      const auto [l, m] = sh_unindex(static_cast<int>(it.col()));
      CHECK(std::abs(l - r) <= 2);
      CHECK(std::abs(m - q) <= 2);
    }
  }
}

TEST_CASE("precession-free assembly equals the zero-precession model") {
  const ParticleModel model = aniso_model();
  const Vec3 H(3000.0, -1000.0, 2000.0), n = Vec3(1.0, 2.0, -0.5).normalized();
  const ShMatrix a = ShOperator(10, model, false).assemble(H, n);
  const ShMatrix b = ShOperator(10, model.without_precession(), true).assemble(H, n);
  REQUIRE(a.nonZeros() == b.nonZeros());
  for (Eigen::Index k = 0; k < a.nonZeros(); ++k) CHECK(a.valuePtr()[k] == b.valuePtr()[k]);
}

TEST_CASE("matrix commutes with the conjugation reflection") {
  const int N = 9;
  const ShMatrix m = assemble_sh_matrix(N, Vec3(2000.0, 1500.0, -800.0), Vec3(0.3, 0.4, 0.866).normalized(),
                                        aniso_model());
  const ShVector c = oracle::random_real_coefficients(N, 5);
  CHECK(sh_reality_defect(c) < 1e-15);
  const ShVector mc = m * c;
  CHECK(sh_reality_defect(mc) <= 1e-12 * mc.norm());
}

TEST_CASE("matrix action matches the quadrature projection") {
  const int N = 6;
  const ParticleModel model = aniso_model(4000.0);
  const Vec3 H = Vec3(0.004, -0.002, 0.006) / kMu0, n = Vec3(0.6, -0.48, 0.64).normalized();
  const ShVector c = oracle::random_real_coefficients(N, 9);
  for (bool precession : {true, false}) {
    const ShVector a = ShOperator(N, model, precession).assemble(H, n) * c;
    const ShVector ref = oracle::fokker_planck_projection(c, N, model, H, n, precession, oracle::sphere_rule(24, 48));
    CHECK((a - ref).norm() <= 1e-6 * ref.norm());
  }
}

TEST_CASE("standard and balanced bases describe the same density") {
  const int N = 6;
  const ShVector c = oracle::random_real_coefficients(N, 4);
  const ShVector p = sh_to_basis(c, ShBasis::balanced, ShBasis::standard);
  CHECK((sh_to_basis(p, ShBasis::standard, ShBasis::balanced) - c).norm() < 1e-14);
  CHECK(p(0) == c(0));
  const ShMatrix mb = ShOperator(N, aniso_model(), true, ShBasis::balanced).assemble(Vec3(1e3, 2e3, 3e3), Vec3::UnitX());
  const ShMatrix mp = ShOperator(N, aniso_model(), true, ShBasis::standard).assemble(Vec3(1e3, 2e3, 3e3), Vec3::UnitX());
  const ShVector lhs = sh_to_basis(mb * c, ShBasis::balanced, ShBasis::standard);
  const ShVector rhs = mp * p;
  CHECK((lhs - rhs).norm() <= 1e-10 * rhs.norm());
}

TEST_CASE("truncation ratio") {
  ShVector c = sh_initial_uniform(4).coefficients;
  CHECK(sh_truncation_ratio(c) == 0.0);
  c(sh_index(4, 0)) = 1.0;
  CHECK(sh_truncation_ratio(c) > 0.5);
}

TEST_CASE("real stacking") {
  const ShVector c = oracle::random_real_coefficients(5, 2);
  CHECK((sh_from_real(sh_to_real(c)) - c).norm() == 0.0);
  const ShMatrix m = assemble_sh_matrix(5, Vec3(1e3, 0.0, 1e3), Vec3::UnitZ(), aniso_model());
  const Eigen::VectorXd y = sh_real_system(m) * sh_to_real(c);
  CHECK((sh_from_real(y) - m * c).norm() <= 1e-12 * (m * c).norm());
}

TEST_CASE("Neel equilibrium follows the Langevin law") {
  const ParticleModel model = neel_params(PhysicalConstants{});
  for (double xi : {0.5, 3.0}) {
    const double H = xi * model.constants.boltzmann * model.constants.temperature / (kMu0 * model.m0);
    const Vec3 dir = Vec3(1.0, -1.0, 2.0).normalized();
    const Vec3 m = equilibrium_moment(model, H * dir, Vec3::UnitZ(), ShDiscretization{20});
    CHECK(std::abs(m.dot(dir) / oracle::langevin_moment(H, model) - 1.0) < 1e-4);
    CHECK((m - m.dot(dir) * dir).norm() < 1e-8 * model.m0);
  }
}

TEST_CASE("SH trajectory conserves mass and reality") {
  PhysicalConstants c;
  c.anisotropy = 625.0;
  SimulationOptions o;
  o.discretization = ShDiscretization{12};
  const FieldSequence f =
      sinusoidal_sequence(0.02 / kMu0, 25000.0, Vec3(0.001, 0.0, 0.0) / kMu0, Vec3(1.0, 1.0, 0.0).normalized());
  o.integrator.t_end = 0.25 * f.period();
  o.integrator.samples = uniform_samples(0.0, o.integrator.t_end, 51);
  const SimulationResult r = simulate(neel_params(c), f, o);
  REQUIRE(r.status == RunStatus::ok);
  CHECK(r.max_mass_error < 1e-10);
  CHECK(r.max_reality_defect < 1e-8);
  CHECK(r.max_imaginary_moment < 1e-10);
  CHECK(r.max_moment_ratio <= 1.0 + 1e-6);
}

TEST_CASE("invalid truncations are rejected") {
  CHECK_THROWS_AS(ShOperator(1, aniso_model()), InvalidParameter);
  CHECK_THROWS_AS(parse_discretization("sh:x"), InvalidInput);
}
