#include <cmath>
#include <numbers>

#include "doctest.h"

#include "mnp/validation/oracles.hpp"

using namespace mnp;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("Langevin function") {
  CHECK(oracle::langevin(0.0) == 0.0);
  CHECK(oracle::langevin(1e-4) == doctest::Approx(1e-4 / 3.0).epsilon(1e-10));
  CHECK(oracle::langevin(1.0) == doctest::Approx(0.313035285).epsilon(1e-8));
  CHECK(oracle::langevin(1e4) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(oracle::langevin(-2.0) == doctest::Approx(-oracle::langevin(2.0)));
  // branches join smoothly
  CHECK(oracle::langevin(0.0099999) == doctest::Approx(oracle::langevin(0.0100001)).epsilon(1e-6));
  CHECK(oracle::langevin(39.9999) == doctest::Approx(oracle::langevin(40.0001)).epsilon(1e-6));
  for (double x : {0.005, 0.3, 2.0, 10.0, 50.0}) {
    const double fd = oracle::derivative(oracle::langevin, x, 1e-3 * std::max(x, 1.0));
    CHECK(oracle::langevin_derivative(x) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("Langevin moment") {
  const ParticleModel m = brown_params(PhysicalConstants{});
  const double H1 = m.constants.boltzmann * m.constants.temperature / (m.constants.mu0 * m.m0);
  CHECK(oracle::langevin_xi(H1, m) == doctest::Approx(1.0));
  CHECK(oracle::langevin_moment(H1, m) == doctest::Approx(0.313035285 * m.m0));
  CHECK(oracle::langevin_moment(1e6 * H1, m) == doctest::Approx(m.m0).epsilon(1e-5));
}

TEST_CASE("sphere quadrature") {
  const auto rule = oracle::sphere_rule(16, 32);
  CHECK(std::abs(oracle::integrate(rule, [](const Vec3&) { return 1.0 / (4.0 * kPi); }) - 1.0) < 1e-10);
  CHECK(std::abs(oracle::integrate(rule, [](const Vec3& x) { return oracle::ylm(1, 0, x).real(); })) < 1e-14);
  CHECK(oracle::integrate(rule, [](const Vec3& x) { return std::norm(oracle::ylm(1, 0, x)); }) ==
        doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-13));
  // (Y^M_L, Y^-M_L) = 4 pi (-1)^M / (2L + 1)
  const auto i = oracle::integrate_complex(rule, [](const Vec3& x) { return oracle::ylm(3, 2, x) * oracle::ylm(3, -2, x); });
  CHECK(i.real() == doctest::Approx(4.0 * kPi / 7.0).epsilon(1e-12));
  CHECK(std::abs(i.imag()) < 1e-12);
  const auto j = oracle::integrate_complex(rule, [](const Vec3& x) { return oracle::ylm(3, 1, x) * oracle::ylm(3, -1, x); });
  CHECK(j.real() == doctest::Approx(-4.0 * kPi / 7.0).epsilon(1e-12));
}

TEST_CASE("balanced harmonics") {
  const auto rule = oracle::sphere_rule(16, 32);
  for (int l = 0; l <= 5; ++l) {
    for (int m = -l; m <= l; ++m) {
      const double n = oracle::integrate(rule, [&](const Vec3& x) { return std::norm(oracle::balanced_ylm(l, m, x)); });
      CHECK(n == doctest::Approx(4.0 * kPi / (2 * l + 1)).epsilon(1e-12));
    }
  }
  const Vec3 p = Vec3(0.3, 0.4, -0.5).normalized();
  CHECK(std::abs(oracle::balanced_ylm(4, -3, p) - std::conj(oracle::balanced_ylm(4, 3, p))) < 1e-14);
  const auto c = oracle::random_real_coefficients(6, 3);
  CHECK(std::abs(oracle::synthesize(c, 6, p).imag()) < 1e-15);
}

TEST_CASE("Legendre recurrence against closed forms") {
  const double x = 0.37, s = std::sqrt(1 - x * x);
  CHECK(oracle::assoc_legendre(2, 0, x) == doctest::Approx(0.5 * (3 * x * x - 1)));
  CHECK(oracle::assoc_legendre(2, 1, x) == doctest::Approx(-3 * x * s));
  CHECK(oracle::assoc_legendre(2, 2, x) == doctest::Approx(3 * s * s));
  CHECK(oracle::assoc_legendre(2, -1, x) == doctest::Approx(0.5 * x * s));
  CHECK(oracle::assoc_legendre(3, 4, x) == 0.0);
}

TEST_CASE("surface divergence") {
  // rotation fields are divergence free; the tangential projection of a
  // constant field a has divergence -2 a.m
  const Vec3 w(0.3, -0.2, 1.0), a(1.0, 2.0, 3.0);
  const Vec3 m = Vec3(0.5, 0.5, 0.7).normalized();
  CHECK(std::abs(oracle::surface_divergence([&](const Vec3& x) { return Vec3(w.cross(x)); }, m)) < 1e-8);
  const double d = oracle::surface_divergence([&](const Vec3& x) { return Vec3(a - a.dot(x) * x); }, m);
  CHECK(d == doctest::Approx(-2.0 * a.dot(m)).epsilon(1e-7));
}

TEST_CASE("circular convolution") {
  const std::vector<double> c = {1.0, 2.0, 0.0, 0.0};
  const std::vector<double> k = {0.5, 0.25, 0.0, 0.25};
  const auto g = oracle::circular_convolution(c, k);
  CHECK(g[0] == doctest::Approx(0.5 + 2.0 * 0.25));
  CHECK(g[1] == doctest::Approx(0.25 + 1.0));
  CHECK(g[2] == doctest::Approx(0.5));
  CHECK(g[3] == doctest::Approx(0.25));
}

TEST_CASE("fourth-order derivative") {
  CHECK(oracle::derivative([](double x) { return std::exp(x); }, 0.5, 1e-2) ==
        doctest::Approx(std::exp(0.5)).epsilon(1e-9));
}

TEST_CASE("adiabatic kernel integrates to the saturation step") {
  const ParticleModel m = brown_params(PhysicalConstants{});
  const double G = 7.0 / m.constants.mu0;
  // int kernel dx over the whole line = -mu0 (m0 - (-m0))
  double s = 0.0;
  const double L = 2.0, h = 1e-5;
  for (double x = -L; x < L; x += h) s += h * oracle::langevin_kernel(x + 0.5 * h, m, G);
  CHECK(s == doctest::Approx(-2.0 * m.constants.mu0 * m.m0).epsilon(1e-3));
  CHECK(oracle::langevin_kernel(1e-3, m, G) == doctest::Approx(oracle::langevin_kernel(-1e-3, m, G)));
}
