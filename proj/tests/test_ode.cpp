#include <cmath>
#include <complex>

#include "doctest.h"

#include "mnp/error.hpp"
#include "mnp/ode.hpp"
#include "mnp/sh_solver.hpp"
#include "mnp/simulation.hpp"

using namespace mnp;

namespace {

using Sparse = Eigen::SparseMatrix<double>;

Sparse full_pattern(int n) {
  Sparse p(n, n);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) t.emplace_back(i, j, 1.0);
  }
  p.setFromTriplets(t.begin(), t.end());
  p.makeCompressed();
  return p;
}

LinearSystem<double> constant_system(const Eigen::MatrixXd& a) {
  LinearSystem<double> s;
  s.pattern = full_pattern(static_cast<int>(a.rows()));
  s.assemble = [a](double, Side, Sparse& m) {
    for (int i = 0; i < a.rows(); ++i) {
      for (int j = 0; j < a.cols(); ++j) m.coeffRef(i, j) = a(i, j);
    }
  };
  return s;
}

IntegratorConfig config(double t_end, std::vector<double> samples, double rtol = 1e-6) {
  IntegratorConfig c;
  c.rtol = rtol;
  c.atol = 1e-9;
  c.t_end = t_end;
  c.samples = std::move(samples);
  return c;
}

}  // namespace

TEST_CASE("scalar decay") {
  const auto tr = integrate<double>(constant_system(Eigen::MatrixXd::Constant(1, 1, -1.0)),
                                    Eigen::VectorXd::Constant(1, 2.0), config(1.0, {0.0, 0.5, 1.0}));
  REQUIRE(tr.states.size() == 3);
  CHECK(tr.states[0](0) == 2.0);
  CHECK(std::abs(tr.states[2](0) / 2.0 - std::exp(-1.0)) < 1e-5);
  CHECK(std::abs(tr.states[1](0) / 2.0 - std::exp(-0.5)) < 1e-5);
}

TEST_CASE("skew flows conserve the norm") {
  LinearSystem<double> s;
  s.pattern = full_pattern(3);
  s.assemble = [](double t, Side, Sparse& m) {
    const double a = 2.0 + std::cos(t), b = 0.5 * std::sin(3 * t), c = 1.0;
    m.coeffRef(0, 1) = -a, m.coeffRef(1, 0) = a;
    m.coeffRef(0, 2) = b, m.coeffRef(2, 0) = -b;
    m.coeffRef(1, 2) = -c, m.coeffRef(2, 1) = c;
    m.coeffRef(0, 0) = m.coeffRef(1, 1) = m.coeffRef(2, 2) = 0.0;
  };
  const Eigen::Vector3d x0(1.0, 0.5, -0.2);
  const auto tr = integrate<double>(s, x0, config(10.0, uniform_samples(0.0, 10.0, 101)));
  for (const auto& x : tr.states) CHECK(std::abs(x.norm() - x0.norm()) <= 10 * 1e-6 * x0.norm());
}

TEST_CASE("stiff decay within the step budget") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = -1e6;
  a(1, 1) = -1.0;
  const auto tr = integrate<double>(constant_system(a), Eigen::Vector2d(1.0, 1.0), config(1.0, {1e-6, 0.5, 1.0}));
  CHECK(std::abs(tr.states[0](0) - std::exp(-1.0)) < 1e-5 * std::exp(-1.0));
  CHECK(std::abs(tr.states[2](1) - std::exp(-1.0)) < 1e-5 * std::exp(-1.0));
  CHECK(tr.stats.accepted + tr.stats.rejected <= 200);
}

TEST_CASE("flow linearity") {
  Eigen::MatrixXd a(2, 2);
  a << -2.0, 1.0, -1.0, -0.5;
  const auto s = constant_system(a);
  const auto cfg = config(2.0, uniform_samples(0.0, 2.0, 11));
  const Eigen::Vector2d x(1.0, 0.0), z(0.0, 1.0);
  const auto tx = integrate<double>(s, x, cfg), tz = integrate<double>(s, z, cfg);
  const auto tc = integrate<double>(s, Eigen::Vector2d(2.0 * x + 3.0 * z), cfg);
  for (std::size_t k = 0; k < tc.states.size(); ++k) {
    const Eigen::VectorXd lin = 2.0 * tx.states[k] + 3.0 * tz.states[k];
    CHECK((tc.states[k] - lin).norm() <= 10 * 1e-6 * lin.norm() + 1e-9);
  }
}

TEST_CASE("tolerance monotonicity") {
  LinearSystem<double> s;
  s.pattern = full_pattern(2);
  s.assemble = [](double t, Side, Sparse& m) {
    m.coeffRef(0, 0) = -1.0, m.coeffRef(0, 1) = std::sin(t) + std::cos(t);
    m.coeffRef(1, 0) = 0.0, m.coeffRef(1, 1) = 0.0;
  };
  const Eigen::Vector2d x0(0.0, 1.0);
  const auto ref = integrate<double>(s, x0, config(5.0, {}, 1e-10)).final_state;
  double last = INFINITY;
  for (double rtol : {1e-4, 5e-5, 2.5e-5, 1.25e-5}) {
    const double err = (integrate<double>(s, x0, config(5.0, {}, rtol)).final_state - ref).norm();
    CHECK(err <= last);
    last = err;
  }
  // x = sin t for this forcing
  CHECK(std::abs(ref(0) - std::sin(5.0)) < 1e-8);
}

TEST_CASE("breakpoints are not crossed") {
  LinearSystem<double> s;
  s.pattern = full_pattern(1);
  s.breakpoints = {0.5};
  s.assemble = [](double t, Side side, Sparse& m) {
    const bool after = t > 0.5 || (t == 0.5 && side == Side::right);
    m.coeffRef(0, 0) = after ? -3.0 : -1.0;
  };
  const auto tr = integrate<double>(s, Eigen::VectorXd::Constant(1, 1.0), config(1.0, {0.5, 1.0}));
  CHECK(std::abs(tr.states[0](0) - std::exp(-0.5)) < 1e-6);
  CHECK(std::abs(tr.states[1](0) - std::exp(-0.5 - 1.5)) < 1e-6);
}

TEST_CASE("complex systems") {
  using CSparse = Eigen::SparseMatrix<std::complex<double>>;
  LinearSystem<std::complex<double>> s;
  CSparse p(1, 1);
  p.insert(0, 0) = 1.0;
  s.pattern = p;
  s.assemble = [](double, Side, CSparse& m) { m.coeffRef(0, 0) = std::complex<double>(-0.5, 2.0); };
  const auto tr = integrate<std::complex<double>>(s, Eigen::VectorXcd::Constant(1, 1.0), config(3.0, {3.0}));
  CHECK(std::abs(tr.states[0](0) - std::exp(std::complex<double>(-1.5, 6.0))) < 1e-5);
}

TEST_CASE("invalid configurations") {
  const auto s = constant_system(Eigen::MatrixXd::Constant(1, 1, -1.0));
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
  CHECK_THROWS_AS(integrate<double>(s, x, config(0.0, {})), InvalidParameter);
  CHECK_THROWS_AS(integrate<double>(s, x, config(1.0, {0.5, 0.2})), InvalidParameter);
  CHECK_THROWS_AS(integrate<double>(s, x, config(1.0, {2.0})), InvalidParameter);
  CHECK_THROWS_AS(integrate<double>(s, Eigen::VectorXd::Constant(2, 1.0), config(1.0, {})), InvalidInput);
  IntegratorConfig c = config(1.0, {});
  c.rtol = 0.0;
  CHECK_THROWS_AS(integrate<double>(s, x, c), InvalidParameter);
}

TEST_CASE("step budget exhaustion is a stiffness failure") {
  auto c = config(1.0, {});
  c.max_steps = 3;
  CHECK_THROWS_AS(integrate<double>(constant_system(Eigen::MatrixXd::Constant(1, 1, -1.0)),
                                    Eigen::VectorXd::Constant(1, 1.0), c),
                  StiffnessFailure);
}

TEST_CASE("steady state of pure diffusion is uniform") {
  const ShMatrix m = assemble_sh_matrix(8, Vec3::Zero(), Vec3::UnitZ(), neel_params(PhysicalConstants{}));
  ShVector x0 = ShVector::Zero(m.rows());
  x0(0) = 1.0 / (4.0 * std::numbers::pi);
  x0(5) = 0.01;
  ShVector w = ShVector::Zero(m.rows());
  w(0) = 1.0;
  const ShVector x = steady_state<std::complex<double>>(m, x0, w);
  CHECK(std::abs(x(0) - x0(0)) < 1e-15);
  CHECK(x.tail(x.size() - 1).norm() < 1e-14);
}

TEST_CASE("steady state is a fixed point of the flow") {
  PhysicalConstants c;
  c.anisotropy = 1000.0;
  const FieldSequence f = static_sequence(Vec3(3000.0, 0.0, 1000.0), Vec3(0.0, 0.6, 0.8));
  const ParticleModel model = neel_params(c);
  const Vec3 m = equilibrium_moment(model, f.field(0.0), f.easy_axis(0.0), ShDiscretization{14});
  SimulationOptions o;
  o.discretization = ShDiscretization{14};
  o.initial = InitialState::equilibrium;
  o.integrator.t_end = 50.0 * model.tau;
  o.integrator.samples = {o.integrator.t_end};
  const SimulationResult r = simulate(model, f, o);
  REQUIRE(r.status == RunStatus::ok);
  CHECK((r.moments.moment.back() - m).norm() < 1e-6 * model.m0);
}
