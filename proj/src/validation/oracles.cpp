#include "mnp/validation/oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace mnp::oracle {

namespace {

constexpr double kPi = std::numbers::pi;

// nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

double factorial_ratio(int a, int b) {  // a! / b!
  return std::exp(std::lgamma(a + 1.0) - std::lgamma(b + 1.0));
}

int index(int l, int m) { return l * l + l + m; }

}  // namespace

double langevin(double xi) {
  const double a = std::abs(xi);
  if (a < 1e-2) {
    const double x2 = xi * xi;
    return xi * (1.0 / 3.0 - x2 / 45.0 + 2.0 * x2 * x2 / 945.0);
  }
  if (a > 40.0) return (xi > 0 ? 1.0 : -1.0) - 1.0 / xi;
  return 1.0 / std::tanh(xi) - 1.0 / xi;
}

double langevin_derivative(double xi) {
  const double a = std::abs(xi);
  if (a < 1e-2) {
    const double x2 = xi * xi;
    return 1.0 / 3.0 - x2 / 15.0 + 2.0 * x2 * x2 / 189.0;
  }
  if (a > 40.0) return 1.0 / (xi * xi);
  const double s = std::sinh(xi);
  return 1.0 / (xi * xi) - 1.0 / (s * s);
}

double langevin_xi(double H, const ParticleModel& model) {
  const PhysicalConstants& c = model.constants;
  return c.mu0 * model.m0 * H / (c.boltzmann * c.temperature);
}

double langevin_moment(double H, const ParticleModel& model) { return model.m0 * langevin(langevin_xi(H, model)); }

double langevin_kernel(double x, const ParticleModel& model, double gradient) {
  const PhysicalConstants& c = model.constants;
  const double dxi_dx = c.mu0 * model.m0 * 0.5 * gradient / (c.boltzmann * c.temperature);
  return -c.mu0 * model.m0 * langevin_derivative(dxi_dx * x) * dxi_dx;
}

SphereRule sphere_rule(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) throw std::invalid_argument("sphere rule needs positive sizes");
  std::vector<double> z, wz;
  gauss_legendre(n_theta, z, wz);
  SphereRule r;
  for (int i = 0; i < n_theta; ++i) {
    const double ct = z[static_cast<std::size_t>(i)];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < n_phi; ++j) {
      const double p = 2.0 * kPi * j / n_phi;
      r.points.emplace_back(st * std::cos(p), st * std::sin(p), ct);
      r.weights.push_back(wz[static_cast<std::size_t>(i)] * 2.0 * kPi / n_phi);
    }
  }
  return r;
}

double integrate(const SphereRule& rule, const std::function<double(const Vec3&)>& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < rule.points.size(); ++k) s += rule.weights[k] * f(rule.points[k]);
  return s;
}

std::complex<double> integrate_complex(const SphereRule& rule,
                                       const std::function<std::complex<double>(const Vec3&)>& f) {
  std::complex<double> s = 0.0;
  for (std::size_t k = 0; k < rule.points.size(); ++k) s += rule.weights[k] * f(rule.points[k]);
  return s;
}

double assoc_legendre(int l, int m, double x) {
  if (l < 0 || std::abs(m) > l) return 0.0;
  if (m < 0) {
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    return sign * factorial_ratio(l + m, l - m) * assoc_legendre(l, -m, x);
  }
  double pmm = 1.0;
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  for (int k = 1; k <= m; ++k) pmm *= -(2.0 * k - 1.0) * s;
  if (l == m) return pmm;
  double p1 = x * (2.0 * m + 1.0) * pmm;
  if (l == m + 1) return p1;
  double p0 = pmm;
  for (int k = m + 2; k <= l; ++k) {
    const double p2 = (x * (2.0 * k - 1.0) * p1 - (k + m - 1.0) * p0) / (k - m);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

std::complex<double> ylm(int l, int m, const Vec3& point) {
  const Vec3 u = point.normalized();
  const double phi = std::atan2(u.y(), u.x());
  return assoc_legendre(l, m, std::clamp(u.z(), -1.0, 1.0)) * std::polar(1.0, m * phi);
}

std::complex<double> balanced_ylm(int l, int m, const Vec3& point) {
  double s = std::sqrt(factorial_ratio(l - m, l + m));
  if (m < 0 && (m % 2 != 0)) s = -s;
  return s * ylm(l, m, point);
}

std::complex<double> synthesize(const Eigen::VectorXcd& c, int n_max, const Vec3& point) {
  std::complex<double> f = 0.0;
  for (int l = 0; l <= n_max; ++l) {
    for (int m = -l; m <= l; ++m) f += c(index(l, m)) * balanced_ylm(l, m, point);
  }
  return f;
}

Eigen::VectorXcd random_real_coefficients(int n_max, unsigned seed, double decay) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero((n_max + 1) * (n_max + 1));
  c(0) = 1.0 / (4.0 * kPi);
  for (int l = 1; l <= n_max; ++l) {
    const double a = 0.05 * std::pow(decay, l);
    c(index(l, 0)) = a * u(gen);
    for (int m = 1; m <= l; ++m) {
      const std::complex<double> z(a * u(gen), a * u(gen));
      c(index(l, m)) = z;
      c(index(l, -m)) = std::conj(z);
    }
  }
  return c;
}

double surface_divergence(const std::function<Vec3(const Vec3&)>& b, const Vec3& m, double h) {
  Eigen::Matrix3d J;
  for (int j = 0; j < 3; ++j) {
    Vec3 e = Vec3::Zero();
    e(j) = h;
    J.col(j) = (b(m + e) - b(m - e)) / (2.0 * h);
  }
  return J.trace() - m.dot(J * m);
}

Eigen::VectorXcd fokker_planck_projection(const Eigen::VectorXcd& c, int n_max, const ParticleModel& model,
                                          const Vec3& H, const Vec3& n, bool precession, const SphereRule& rule) {
  const double p1 = precession ? model.p1 : 0.0, p3 = precession ? model.p3 : 0.0;
  const double p2 = model.p2, p4 = model.p4;
  auto b = [&](const Vec3& m) -> Vec3 {
    return p1 * H.cross(m) + p2 * m.cross(H).cross(m) + p3 * n.dot(m) * n.cross(m) +
           p4 * n.dot(m) * m.cross(n).cross(m);
  };
  auto f = [&](const Vec3& x) { return synthesize(c, n_max, x); };
  Eigen::VectorXcd lap_c = c;
  for (int l = 0; l <= n_max; ++l) {
    for (int m = -l; m <= l; ++m) lap_c(index(l, m)) *= -l * (l + 1.0);
  }
  const double diff = 1.0 / (2.0 * model.tau);

  std::vector<std::complex<double>> rhs(rule.points.size());
  for (std::size_t k = 0; k < rule.points.size(); ++k) {
    const Vec3& m = rule.points[k];
    const Vec3 bm = b(m);
    const double bn = bm.norm();
    std::complex<double> grad_b = 0.0;
    if (bn > 0.0) {
      const double h = 1e-5;
      const Vec3 d = bm / bn;
      grad_b = bn * (f(m + h * d) - f(m - h * d)) / (2.0 * h);
    }
    const double div_b = surface_divergence(b, m);
    rhs[k] = diff * synthesize(lap_c, n_max, m) - (grad_b + f(m) * div_b);
  }
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(c.size());
  for (int l = 0; l <= n_max; ++l) {
    for (int m = -l; m <= l; ++m) {
      std::complex<double> s = 0.0;
      for (std::size_t k = 0; k < rule.points.size(); ++k) {
        s += rule.weights[k] * rhs[k] * std::conj(balanced_ylm(l, m, rule.points[k]));
      }
      out(index(l, m)) = (2.0 * l + 1.0) / (4.0 * kPi) * s;
    }
  }
  return out;
}

std::vector<double> circular_convolution(const std::vector<double>& c, const std::vector<double>& kernel) {
  if (c.size() != kernel.size()) throw std::invalid_argument("convolution operands differ in length");
  const std::size_t n = c.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i] += kernel[(i + n - j) % n] * c[j];
  }
  return out;
}

double derivative(const std::function<double(double)>& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
}

}  // namespace mnp::oracle
