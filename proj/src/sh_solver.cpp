#include "mnp/sh_solver.hpp"

#include <cmath>
#include <string>

#include "mnp/error.hpp"

namespace mnp {

namespace {

// a! / b! for small |a - b|
double factorial_ratio(int a, int b) {
  double v = 1.0;
  if (a >= b) {
    for (int k = b + 1; k <= a; ++k) v *= k;
  } else {
    for (int k = a + 1; k <= b; ++k) v /= k;
  }
  return v;
}

// s_{l,m} / s_{r,q}
double scale_ratio(int r, int q, int l, int m) {
  const double mag = std::sqrt(factorial_ratio(l - m, r - q) * factorial_ratio(r + q, l + m));
  const int sr = (q < 0 && (q % 2 != 0)) ? -1 : 1;
  const int sl = (m < 0 && (m % 2 != 0)) ? -1 : 1;
  return mag * sr * sl;
}

}  // namespace

int sh_index(int r, int q) {
  if (r < 0 || q < -r || q > r) {
    throw OutOfRange("invalid spherical harmonic (" + std::to_string(r) + ", " + std::to_string(q) + ")");
  }
  return r * r + r + q;
}

std::pair<int, int> sh_unindex(int index) {
  if (index < 0) throw OutOfRange("negative spherical harmonic index");
  int r = static_cast<int>(std::sqrt(static_cast<double>(index)));
  while (r * r > index) --r;
  while ((r + 1) * (r + 1) <= index) ++r;
  return {r, index - r * r - r};
}

double sh_basis_scale(int r, int q) {
  if (std::abs(q) > r) throw OutOfRange("invalid spherical harmonic order");
  return scale_ratio(0, 0, r, q);
}

ShState sh_initial_uniform(int n_max) {
  if (n_max < 0) throw InvalidParameter("n_max must be non-negative");
  ShState s;
  s.n_max = n_max;
  s.coefficients = ShVector::Zero(sh_size(n_max));
  s.coefficients(0) = 1.0 / (4.0 * std::numbers::pi);
  return s;
}

ShOperator::ShOperator(int n_max, const ParticleModel& model, bool precession, ShBasis basis)
    : n_max_(n_max), model_(precession ? model : model.without_precession()), basis_(basis) {
  if (n_max < 2) throw InvalidParameter("n_max must be >= 2");
  if (!(model.tau > 0.0)) throw InvalidParameter("model relaxation time must be positive");
  const int n = sh_size(n_max);
  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * 25);
  for (int i = 0; i < n; ++i) {
    const auto [r, q] = sh_unindex(i);
    for (int dr = -2; dr <= 2; ++dr) {
      for (int dq = -2; dq <= 2; ++dq) {
        const int l = r + dr;
        const int m = q + dq;
        if (l < 0 || l > n_max || std::abs(m) > l) continue;
        const ShCoefficient c = sh_coefficient(r, q, dr, dq, model_);
        const bool diagonal = dr == 0 && dq == 0;
        if (!diagonal && c.field == 0.0 && c.anisotropy == 0.0) continue;
        triplets.emplace_back(i, sh_index(l, m), Complex(1.0, 0.0));
      }
    }
  }
  pattern_.resize(n, n);
  pattern_.setFromTriplets(triplets.begin(), triplets.end());
  pattern_.makeCompressed();

  entries_.resize(static_cast<std::size_t>(pattern_.nonZeros()));
  for (int col = 0; col < n; ++col) {
    const auto [l, m] = sh_unindex(col);
    for (ShMatrix::InnerIterator it(pattern_, col); it; ++it) {
      const auto [r, q] = sh_unindex(static_cast<int>(it.row()));
      const ShCoefficient c = sh_coefficient(r, q, l - r, m - q, model_);
      const double s = basis_ == ShBasis::balanced ? scale_ratio(r, q, l, m) : 1.0;
      const auto k = static_cast<std::size_t>(&it.valueRef() - pattern_.valuePtr());
      entries_[k] = Entry{c.field * s, c.anisotropy * s, c.diagonal, m - q};
      it.valueRef() = 0.0;
    }
  }
}

void ShOperator::assemble(const Vec3& H, const Vec3& n, ShMatrix& out) const {
  if (out.nonZeros() != pattern_.nonZeros() || out.rows() != pattern_.rows()) out = pattern_;
  Complex hm[3], nm[5];
  for (int k = 0; k < 3; ++k) hm[k] = sh_field_monomial(H, k - 1);
  for (int k = 0; k < 5; ++k) nm[k] = sh_axis_monomial(n, k - 2);
  Complex* v = out.valuePtr();
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const Entry& e = entries_[k];
    Complex val = e.diagonal + e.anisotropy * nm[e.dq + 2];
    if (e.dq >= -1 && e.dq <= 1) val += e.field * hm[e.dq + 1];
    v[k] = val;
  }
}

ShMatrix ShOperator::assemble(const Vec3& H, const Vec3& n) const {
  ShMatrix out = pattern_;
  assemble(H, n, out);
  return out;
}

void ShOperator::assemble_rate(const Vec3& dH, const Vec3& n, const Vec3& dn, ShMatrix& out) const {
  if (out.nonZeros() != pattern_.nonZeros() || out.rows() != pattern_.rows()) out = pattern_;
  Complex hm[3], nm[5];
  for (int k = 0; k < 3; ++k) hm[k] = sh_field_monomial(dH, k - 1);
  for (int k = 0; k < 5; ++k) nm[k] = sh_axis_monomial_rate(n, dn, k - 2);
  Complex* v = out.valuePtr();
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const Entry& e = entries_[k];
    Complex val = e.anisotropy * nm[e.dq + 2];
    if (e.dq >= -1 && e.dq <= 1) val += e.field * hm[e.dq + 1];
    v[k] = val;
  }
}

ShMatrix assemble_sh_matrix(int n_max, const Vec3& H, const Vec3& n, const ParticleModel& model, bool precession) {
  return ShOperator(n_max, model, precession).assemble(H, n);
}

ShVector sh_to_basis(const ShVector& c, ShBasis from, ShBasis to) {
  if (from == to) return c;
  ShVector out(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const auto [r, q] = sh_unindex(static_cast<int>(i));
    const double s = sh_basis_scale(r, q);
    // f = C Y = (C / s)(s Y)
    out(i) = from == ShBasis::standard ? c(i) / s : c(i) * s;
  }
  return out;
}

double sh_truncation_ratio(const ShVector& c, ShBasis basis) {
  const ShVector b = sh_to_basis(c, basis, ShBasis::balanced);
  const int n_max = sh_unindex(static_cast<int>(b.size()) - 1).first;
  double total = 0.0, top = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const int r = sh_unindex(static_cast<int>(i)).first;
    const double e = std::norm(b(i)) / (2 * r + 1);
    total += e;
    if (r >= n_max - 1) top += e;
  }
  return total > 0.0 ? top / total : 0.0;
}

double sh_reality_defect(const ShVector& c) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const auto [r, q] = sh_unindex(static_cast<int>(i));
    if (q < 0) continue;
    worst = std::max(worst, std::abs(c(sh_index(r, -q)) - std::conj(c(i))));
  }
  return worst;
}

Eigen::SparseMatrix<double> sh_real_system(const ShMatrix& m) {
  const Eigen::Index n = m.rows();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(m.nonZeros()) * 4);
  for (int col = 0; col < m.outerSize(); ++col) {
    for (ShMatrix::InnerIterator it(m, col); it; ++it) {
      const auto i = it.row();
      const auto j = it.col();
      t.emplace_back(i, j, it.value().real());
      t.emplace_back(i, j + n, -it.value().imag());
      t.emplace_back(i + n, j, it.value().imag());
      t.emplace_back(i + n, j + n, it.value().real());
    }
  }
  Eigen::SparseMatrix<double> out(2 * n, 2 * n);
  out.setFromTriplets(t.begin(), t.end());
  out.makeCompressed();
  return out;
}

Eigen::VectorXd sh_to_real(const ShVector& c) {
  Eigen::VectorXd x(2 * c.size());
  x.head(c.size()) = c.real();
  x.tail(c.size()) = c.imag();
  return x;
}

ShVector sh_from_real(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size() / 2;
  ShVector c(n);
  c.real() = x.head(n);
  c.imag() = x.tail(n);
  return c;
}

}  // namespace mnp
