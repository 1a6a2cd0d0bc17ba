#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mnp/field_model.hpp"
#include "mnp/sphere_mesh.hpp"

namespace mnp {

using FvMatrix = Eigen::SparseMatrix<double>;

struct FvState {
  std::shared_ptr<const TriMesh> mesh;
  Eigen::VectorXd u;  // cell averages
};

FvState fv_initial_uniform(std::shared_ptr<const TriMesh> mesh);

// Sum of u_i |T_i|.
double fv_mass(const TriMesh& mesh, const Eigen::VectorXd& u);

// Two-point flux diffusion with coefficient c = 1/(2 tau).
FvMatrix assemble_fv_diffusion(const TriMesh& mesh, double c);

// Conservative advection: the flux through side j of T_i is
//   F = ahat u_i + (d - ahat) u_{i_j},  d = b(edge midpoint) . e * chord,
//   ahat = beta max(d, 0) + (1 - beta) alpha d,
// and (M u)_i = -(1/|T_i|) sum_j F.
FvMatrix assemble_fv_advection(const TriMesh& mesh, const std::function<Vec3(const Vec3&)>& b, double beta);

/**
 * M(t) = A(t) + C on a fixed mesh.  C is assembled once; A is rebuilt per
 * call from one b evaluation per edge.
 */
class FvOperator {
public:
  FvOperator(std::shared_ptr<const TriMesh> mesh, const ParticleModel& model, double beta, bool precession = true);

  const TriMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const TriMesh> mesh_ptr() const { return mesh_; }
  Eigen::Index size() const { return pattern_.rows(); }
  double beta() const { return beta_; }
  const ParticleModel& model() const { return model_; }

  const FvMatrix& pattern() const { return pattern_; }
  const FvMatrix& diffusion() const { return diffusion_; }
  void assemble(const Vec3& H, const Vec3& n, FvMatrix& out) const;
  FvMatrix assemble(const Vec3& H, const Vec3& n) const;
  void assemble_rate(const Vec3& H, const Vec3& dH, const Vec3& n, const Vec3& dn, FvMatrix& out) const;
  Eigen::VectorXd mass_weights() const;

private:
  struct Slots {
    Eigen::Index own, across;     // row t0: (t0,t0), (t0,t1)
    Eigen::Index back, back_own;  // row t1: (t1,t0), (t1,t1)
  };
  std::shared_ptr<const TriMesh> mesh_;
  ParticleModel model_;
  double beta_;
  FvMatrix pattern_;
  FvMatrix diffusion_;  // same pattern as pattern_
  std::vector<Slots> slots_;
};

}  // namespace mnp
