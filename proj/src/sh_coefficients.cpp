#include "mnp/sh_solver.hpp"

namespace mnp {

namespace {

constexpr Complex I{0.0, 1.0};

// Field and precession part, Galerkin row (r,q).
Complex field_term(double r, double q, int dr, int dq, double p1, double p2) {
  switch (dr * 10 + dq) {
    case 1:  // (0, +1)
      return -I * p1 / 2.0 * (r - q) * (r + q + 1);
    case -1:  // (0, -1)
      return -I * p1 / 2.0;
    case 0:
      return -I * p1 * q;
    case -10:
      return p2 * (r + 1) * (r - q) / (2 * r - 1);
    case 10:
      return -p2 * r * (r + q + 1) / (2 * r + 3);
    case -9:  // (-1, +1)
      return p2 * (r + 1) * (r - q) * (r - q - 1) / (4 * r - 2);
    case 11:
      return p2 * r * (r + q + 1) * (r + q + 2) / (4 * r + 6);
    case -11:
      return -p2 * (r + 1) / (4 * r - 2);
    case 9:  // (+1, -1)
      return -p2 * r / (4 * r + 6);
    default:
      return 0.0;
  }
}

// Uniaxial anisotropy part, Galerkin row (l,m).
Complex anisotropy_term(double l, double m, int dl, int dm, double p3, double p4) {
  const double a = 2 * l - 3, b = 2 * l - 1, c = 2 * l + 3, d = 2 * l + 5;
  switch (dl) {
    case -2:
      switch (dm) {
        case -2: return p4 * (l + 1) / (4 * a * b);
        case -1: return -p4 * (l + 1) * (l - m) / (a * b);
        case 0: return -p4 * (l + 1) * (l - m) * (l - m - 1) / (2 * a * b);
        case 1: return p4 * (l + 1) * (l - m) * (l - m - 2) * (l - m - 1) / (a * b);
        case 2: return p4 * (l + 1) * (l - m) * (l - m - 3) * (l - m - 2) * (l - m - 1) / (4 * a * b);
      }
      break;
    case -1:
      switch (dm) {
        case -2: return I * p3 / (4 * b);
        case -1: return I * p3 * (2 * m - l - 1) / (2 * b);
        case 0: return I * p3 * m * (l - m) / (2 * b);
        case 1: return -I * p3 * (l - m) * (l - m - 1) * (2 * m + l + 1) / (2 * b);
        case 2: return -I * p3 * (l - m) * (l - m - 1) * (l - m - 2) * (l + m + 1) / (4 * b);
      }
      break;
    case 0:
      switch (dm) {
        case -2: return -p4 * 3.0 / (4 * b * c);
        case -1: return -p4 * 3.0 * (2 * m - 1) / (2 * b * c);
        case 0: return -p4 * (l * l + l - 3 * m * m) / (2 * b * c);
        case 1: return -p4 * 3.0 * (2 * m + 1) * (l - m) * (l + m + 1) / (2 * b * c);
        case 2: return -p4 * 3.0 * (l - m) * (l - m - 1) * (l + m + 1) * (l + m + 2) / (4 * b * c);
      }
      break;
    case 1:
      switch (dm) {
        case -2: return -I * p3 / (4 * c);
        case -1: return -I * p3 * (2 * m + l) / (2 * c);
        case 0: return I * p3 * m * (l + m + 1) / (2 * c);
        case 1: return I * p3 * (2 * m - l) * (l + m + 1) * (l + m + 2) / (2 * c);
        case 2: return I * p3 * (l - m) * (l + m + 1) * (l + m + 2) * (l + m + 3) / (4 * c);
      }
      break;
    case 2:
      switch (dm) {
        case -2: return -p4 * l / (4 * c * d);
        case -1: return -p4 * l * (l + m + 1) / (c * d);
        case 0: return p4 * l * (l + m + 1) * (l + m + 2) / (2 * c * d);
        case 1: return p4 * l * (l + m + 1) * (l + m + 2) * (l + m + 3) / (c * d);
        case 2: return -p4 * l * (l + m + 1) * (l + m + 2) * (l + m + 3) * (l + m + 4) / (4 * c * d);
      }
      break;
  }
  return 0.0;
}

}  // namespace

ShCoefficient sh_coefficient(int r, int q, int dr, int dq, const ParticleModel& model) {
  ShCoefficient c;
  const int l = r + dr;
  const int m = q + dq;
  if (l < 0 || std::abs(m) > l || std::abs(dr) > 2 || std::abs(dq) > 2) return c;
  if (std::abs(dq) <= 1 && std::abs(dr) <= 1) c.field = field_term(r, q, dr, dq, model.p1, model.p2);
  c.anisotropy = anisotropy_term(r, q, dr, dq, model.p3, model.p4);
  if (dr == 0 && dq == 0) c.diagonal = -static_cast<double>(r) * (r + 1) * model.diffusion();
  return c;
}

Complex sh_field_monomial(const Vec3& H, int dq) {
  switch (dq) {
    case -1: return {H.x(), -H.y()};
    case 0: return H.z();
    case 1: return {H.x(), H.y()};
    default: return 0.0;
  }
}

Complex sh_axis_monomial(const Vec3& n, int dq) {
  const Complex minus(n.x(), -n.y());
  const Complex plus(n.x(), n.y());
  switch (dq) {
    case -2: return minus * minus;
    case -1: return n.z() * minus;
    case 0: return n.x() * n.x() + n.y() * n.y() - 2.0 * n.z() * n.z();
    case 1: return n.z() * plus;
    case 2: return plus * plus;
    default: return 0.0;
  }
}

Complex sh_axis_monomial_rate(const Vec3& n, const Vec3& dn, int dq) {
  const Complex minus(n.x(), -n.y()), dminus(dn.x(), -dn.y());
  const Complex plus(n.x(), n.y()), dplus(dn.x(), dn.y());
  switch (dq) {
    case -2: return 2.0 * minus * dminus;
    case -1: return dn.z() * minus + n.z() * dminus;
    case 0: return 2.0 * (n.x() * dn.x() + n.y() * dn.y()) - 4.0 * n.z() * dn.z();
    case 1: return dn.z() * plus + n.z() * dplus;
    case 2: return 2.0 * plus * dplus;
    default: return 0.0;
  }
}

}  // namespace mnp
