#include "mnp/fv_solver.hpp"

#include <cmath>

#include "mnp/error.hpp"

namespace mnp {

namespace {

FvMatrix neighbor_pattern(const TriMesh& mesh) {
  const auto nt = static_cast<Eigen::Index>(mesh.triangle_count());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(nt) * 4);
  for (Eigen::Index i = 0; i < nt; ++i) {
    t.emplace_back(i, i, 0.0);
    for (int j = 0; j < 3; ++j) t.emplace_back(i, mesh.neighbor[3 * i + j], 0.0);
  }
  FvMatrix m(nt, nt);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

Eigen::Index slot(const FvMatrix& m, Eigen::Index row, Eigen::Index col) {
  const auto* outer = m.outerIndexPtr();
  const auto* inner = m.innerIndexPtr();
  for (auto k = outer[col]; k < outer[col + 1]; ++k) {
    if (inner[k] == row) return k;
  }
  throw InvalidMesh("finite-volume pattern is missing a neighbor entry");
}

void check_beta(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidParameter("upwind fraction beta must lie in [0, 1]");
}

}  // namespace

FvState fv_initial_uniform(std::shared_ptr<const TriMesh> mesh) {
  if (!mesh) throw InvalidInput("missing mesh");
  FvState s;
  s.u = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(mesh->triangle_count()), 1.0 / (4.0 * std::numbers::pi));
  s.mesh = std::move(mesh);
  return s;
}

double fv_mass(const TriMesh& mesh, const Eigen::VectorXd& u) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) s += u(i) * mesh.area[static_cast<std::size_t>(i)];
  return s;
}

FvMatrix assemble_fv_diffusion(const TriMesh& mesh, double c) {
  FvMatrix m = neighbor_pattern(mesh);
  double* v = m.valuePtr();
  for (std::size_t i = 0; i < mesh.triangle_count(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double inv_area = 1.0 / mesh.area[i];
    for (int j = 0; j < 3; ++j) {
      const std::size_t s = 3 * i + j;
      const double w = c * inv_area * mesh.edge_length[mesh.side_edge[s]] / (mesh.h[s] + mesh.h_bar[s]);
      v[slot(m, row, mesh.neighbor[s])] += w;
      v[slot(m, row, row)] -= w;
    }
  }
  return m;
}

FvMatrix assemble_fv_advection(const TriMesh& mesh, const std::function<Vec3(const Vec3&)>& b, double beta) {
  check_beta(beta);
  FvMatrix m = neighbor_pattern(mesh);
  double* v = m.valuePtr();
  for (std::size_t e = 0; e < mesh.edge_count(); ++e) {
    const auto t0 = mesh.edge_triangles[e][0];
    const auto t1 = mesh.edge_triangles[e][1];
    const int s0 = mesh.edge_sides[e][0];
    const double d = b(mesh.edge_midpoint[e]).dot(mesh.edge_normal[e]) * mesh.edge_chord[e];
    const double ahat = beta * std::max(d, 0.0) + (1.0 - beta) * mesh.alpha[s0] * d;
    const double i0 = 1.0 / mesh.area[t0];
    const double i1 = 1.0 / mesh.area[t1];
    v[slot(m, t0, t0)] -= i0 * ahat;
    v[slot(m, t0, t1)] -= i0 * (d - ahat);
    v[slot(m, t1, t0)] += i1 * ahat;
    v[slot(m, t1, t1)] += i1 * (d - ahat);
  }
  return m;
}

FvOperator::FvOperator(std::shared_ptr<const TriMesh> mesh, const ParticleModel& model, double beta, bool precession)
    : mesh_(std::move(mesh)), model_(precession ? model : model.without_precession()), beta_(beta) {
  if (!mesh_) throw InvalidInput("missing mesh");
  check_beta(beta);
  if (!(model.tau > 0.0)) throw InvalidParameter("model relaxation time must be positive");
  pattern_ = neighbor_pattern(*mesh_);
  diffusion_ = assemble_fv_diffusion(*mesh_, model_.diffusion());
  slots_.resize(mesh_->edge_count());
  for (std::size_t e = 0; e < mesh_->edge_count(); ++e) {
    const auto t0 = mesh_->edge_triangles[e][0];
    const auto t1 = mesh_->edge_triangles[e][1];
    slots_[e] = Slots{slot(pattern_, t0, t0), slot(pattern_, t0, t1), slot(pattern_, t1, t0), slot(pattern_, t1, t1)};
  }
}

void FvOperator::assemble(const Vec3& H, const Vec3& n, FvMatrix& out) const {
  if (out.nonZeros() != pattern_.nonZeros() || out.rows() != pattern_.rows()) out = pattern_;
  const TriMesh& m = *mesh_;
  double* v = out.valuePtr();
  std::copy(diffusion_.valuePtr(), diffusion_.valuePtr() + diffusion_.nonZeros(), v);
  for (std::size_t e = 0; e < m.edge_count(); ++e) {
    const Vec3 b = advection_field(m.edge_midpoint[e], H, n, model_);
    const double d = b.dot(m.edge_normal[e]) * m.edge_chord[e];
    const double ahat = beta_ * std::max(d, 0.0) + (1.0 - beta_) * m.alpha[m.edge_sides[e][0]] * d;
    const double i0 = 1.0 / m.area[m.edge_triangles[e][0]];
    const double i1 = 1.0 / m.area[m.edge_triangles[e][1]];
    const Slots& s = slots_[e];
    v[s.own] -= i0 * ahat;
    v[s.across] -= i0 * (d - ahat);
    v[s.back] += i1 * ahat;
    v[s.back_own] += i1 * (d - ahat);
  }
}

FvMatrix FvOperator::assemble(const Vec3& H, const Vec3& n) const {
  FvMatrix out = pattern_;
  assemble(H, n, out);
  return out;
}

void FvOperator::assemble_rate(const Vec3& H, const Vec3& dH, const Vec3& n, const Vec3& dn, FvMatrix& out) const {
  if (out.nonZeros() != pattern_.nonZeros() || out.rows() != pattern_.rows()) out = pattern_;
  const TriMesh& m = *mesh_;
  double* v = out.valuePtr();
  std::fill(v, v + out.nonZeros(), 0.0);
  for (std::size_t e = 0; e < m.edge_count(); ++e) {
    const Vec3& mid = m.edge_midpoint[e];
    const double d = advection_field(mid, H, n, model_).dot(m.edge_normal[e]);
    const double dd = advection_field_rate(mid, H, dH, n, dn, model_).dot(m.edge_normal[e]) * m.edge_chord[e];
    const double up = d > 0.0 ? dd : 0.0;
    const double ahat = beta_ * up + (1.0 - beta_) * m.alpha[m.edge_sides[e][0]] * dd;
    const double i0 = 1.0 / m.area[m.edge_triangles[e][0]];
    const double i1 = 1.0 / m.area[m.edge_triangles[e][1]];
    const Slots& s = slots_[e];
    v[s.own] -= i0 * ahat;
    v[s.across] -= i0 * (dd - ahat);
    v[s.back] += i1 * ahat;
    v[s.back_own] += i1 * (dd - ahat);
  }
}

Eigen::VectorXd FvOperator::mass_weights() const {
  return Eigen::Map<const Eigen::VectorXd>(mesh_->area.data(), static_cast<Eigen::Index>(mesh_->area.size()));
}

}  // namespace mnp
