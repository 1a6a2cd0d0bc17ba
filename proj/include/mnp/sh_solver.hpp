#pragma once

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mnp/field_model.hpp"

namespace mnp {

using Complex = std::complex<double>;
using ShMatrix = Eigen::SparseMatrix<Complex>;
using ShVector = Eigen::VectorXcd;

// Flattened (r, q) ordering: r-major, q ascending, index = r^2 + r + q.
int sh_index(int r, int q);
std::pair<int, int> sh_unindex(int index);
inline int sh_size(int n_max) { return (n_max + 1) * (n_max + 1); }

// Coefficient basis.  standard: Y^q_r = P^q_r(cos t) e^{iqp} with the
// Condon-Shortley P and the standard negative-order extension.  balanced:
// s_{r,q} Y^q_r with s = sqrt((r-q)!/(r+q)!) (times (-1)^q for q < 0),
// which makes real densities satisfy C^{-q} = conj(C^q) and keeps
// coefficients O(1).  C^0_r is the same in both.
enum class ShBasis { balanced, standard };

double sh_basis_scale(int r, int q);  // s_{r,q}

struct ShState {
  int n_max = 0;
  ShVector coefficients;
};

ShState sh_initial_uniform(int n_max);

// Row (r,q), column (r+dr, q+dq) coefficient in the standard basis, split by
// factor: field terms multiply the H monomial selected by dq, anisotropy
// terms the n monomial selected by dq.
struct ShCoefficient {
  Complex field{0.0, 0.0};
  Complex anisotropy{0.0, 0.0};
  double diagonal = 0.0;
};
ShCoefficient sh_coefficient(int r, int q, int dr, int dq, const ParticleModel& model);

// H monomials: dq=-1 -> H1 - iH2, 0 -> H3, +1 -> H1 + iH2.
Complex sh_field_monomial(const Vec3& H, int dq);
// n monomials: -2 -> (n1-in2)^2, -1 -> n3(n1-in2), 0 -> n1^2+n2^2-2n3^2,
// +1 -> n3(n1+in2), +2 -> (n1+in2)^2.
Complex sh_axis_monomial(const Vec3& n, int dq);
Complex sh_axis_monomial_rate(const Vec3& n, const Vec3& dn, int dq);

/**
 * Precomputed Galerkin operator for a fixed truncation and particle model.
 * The sparsity pattern and per-entry coefficients are built once; assembly
 * for a given (H, n) only rewrites values.
 */
class ShOperator {
public:
  ShOperator(int n_max, const ParticleModel& model, bool precession = true, ShBasis basis = ShBasis::balanced);

  int n_max() const { return n_max_; }
  Eigen::Index size() const { return pattern_.rows(); }
  ShBasis basis() const { return basis_; }
  const ParticleModel& model() const { return model_; }

  // Matrix with the operator's pattern and zero values.
  const ShMatrix& pattern() const { return pattern_; }
  void assemble(const Vec3& H, const Vec3& n, ShMatrix& out) const;
  ShMatrix assemble(const Vec3& H, const Vec3& n) const;
  // dM/dt for field rate dH and axis rate dn.
  void assemble_rate(const Vec3& dH, const Vec3& n, const Vec3& dn, ShMatrix& out) const;

private:
  struct Entry {
    Complex field;
    Complex anisotropy;
    double diagonal;
    int dq;
  };
  int n_max_;
  ParticleModel model_;
  ShBasis basis_;
  ShMatrix pattern_;
  std::vector<Entry> entries_;  // storage order of pattern_
};

// One-shot assembly.
ShMatrix assemble_sh_matrix(int n_max, const Vec3& H, const Vec3& n, const ParticleModel& model,
                            bool precession = true);

// Converts coefficients between bases.
ShVector sh_to_basis(const ShVector& c, ShBasis from, ShBasis to);

// Fraction of L2 energy of f in degrees n_max-1 and n_max.
double sh_truncation_ratio(const ShVector& c, ShBasis basis = ShBasis::balanced);
constexpr double kShTruncationThreshold = 1e-6;

// max |C^{-q}_r - conj(C^q_r)| in the balanced basis.
double sh_reality_defect(const ShVector& c);

// Real stacking [Re; Im] and the matching block matrix [[A, -B], [B, A]].
Eigen::SparseMatrix<double> sh_real_system(const ShMatrix& m);
Eigen::VectorXd sh_to_real(const ShVector& c);
ShVector sh_from_real(const Eigen::VectorXd& x);

}  // namespace mnp
