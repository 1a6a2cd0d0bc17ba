#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "mnp/field_model.hpp"

// Reference implementations for tests and acceptance runs.  Nothing here
// calls into the solvers it is used to check.
namespace mnp::oracle {

// L(xi) = coth(xi) - 1/xi, series below |xi| = 1e-2
double langevin(double xi);
double langevin_derivative(double xi);
// xi = mu0 m0 |H| / (k_B T)
double langevin_xi(double H, const ParticleModel& model);
double langevin_moment(double H, const ParticleModel& model);

// Adiabatic x-space kernel for a point source at the origin on a 1D
// sinusoidal trajectory: -mu0 d(m0 L(xi(x)))/dx with H = G x / 2.
double langevin_kernel(double x, const ParticleModel& model, double gradient);

// Gauss-Legendre in cos(theta) times the uniform rule in phi.  Exact for
// polynomials of degree < min(2 n_theta, n_phi).
struct SphereRule {
  std::vector<Vec3> points;
  std::vector<double> weights;
};
SphereRule sphere_rule(int n_theta, int n_phi);
double integrate(const SphereRule& rule, const std::function<double(const Vec3&)>& f);
std::complex<double> integrate_complex(const SphereRule& rule,
                                       const std::function<std::complex<double>(const Vec3&)>& f);

// Condon-Shortley P_l^m for any |m| <= l.
double assoc_legendre(int l, int m, double x);
// Y^m_l(m) = P_l^m(cos t) e^{i m p}, unnormalized
std::complex<double> ylm(int l, int m, const Vec3& point);
// s_{l,m} Y^m_l with s = sqrt((l-m)!/(l+m)!), times (-1)^m for m < 0
std::complex<double> balanced_ylm(int l, int m, const Vec3& point);

// Band-limited density sum c_{lm} s Y^m_l, index l^2 + l + m.  Evaluated
// at point / |point|.
std::complex<double> synthesize(const Eigen::VectorXcd& c, int n_max, const Vec3& point);

// Random coefficients of a real density with C^0_0 = 1/(4 pi).
Eigen::VectorXcd random_real_coefficients(int n_max, unsigned seed, double decay = 0.7);

// Galerkin projection onto degree <= n_max of
//   (1/2tau) Lap f - div(b f),
// with the surface divergence and gradient taken by central differences
// of the radial extensions.
Eigen::VectorXcd fokker_planck_projection(const Eigen::VectorXcd& c, int n_max, const ParticleModel& model,
                                          const Vec3& H, const Vec3& n, bool precession, const SphereRule& rule);

// Surface divergence of the radial-free extension of b, via a central
// difference Jacobian.
double surface_divergence(const std::function<Vec3(const Vec3&)>& b, const Vec3& m, double h = 1e-6);

// O(N^2) circular convolution, (c * k)_i = sum_j k_{(i-j) mod N} c_j
std::vector<double> circular_convolution(const std::vector<double>& c, const std::vector<double>& kernel);

// Fourth-order central difference of a scalar function.
double derivative(const std::function<double(double)>& f, double x, double h);

}  // namespace mnp::oracle
