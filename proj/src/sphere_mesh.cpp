#include "mnp/sphere_mesh.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include "mnp/error.hpp"

namespace mnp {

namespace {

TriMesh icosahedron() {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh m;
  const double raw[12][3] = {{-1, p, 0}, {1, p, 0},  {-1, -p, 0}, {1, -p, 0},
                             {0, -1, p}, {0, 1, p},  {0, -1, -p}, {0, 1, -p},
                             {p, 0, -1}, {p, 0, 1},  {-p, 0, -1}, {-p, 0, 1}};
  for (const auto& v : raw) m.vertices.push_back(Vec3(v[0], v[1], v[2]).normalized());
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& t : m.triangles) {
    const Vec3& a = m.vertices[t[0]];
    const Vec3& b = m.vertices[t[1]];
    const Vec3& c = m.vertices[t[2]];
    if (a.dot((b - a).cross(c - a)) < 0) std::swap(t[1], t[2]);
  }
  return m;
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

void subdivide(TriMesh& m) {
  std::unordered_map<std::uint64_t, int> midpoints;
  midpoints.reserve(m.triangles.size() * 2);
  auto midpoint = [&](int a, int b) {
    auto [it, inserted] = midpoints.try_emplace(edge_key(a, b), 0);
    if (inserted) {
      it->second = static_cast<int>(m.vertices.size());
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
    }
    return it->second;
  };
  std::vector<std::array<int, 3>> next;
  next.reserve(m.triangles.size() * 4);
  for (const auto& t : m.triangles) {
    const int ab = midpoint(t[0], t[1]);
    const int bc = midpoint(t[1], t[2]);
    const int ca = midpoint(t[2], t[0]);
    next.push_back({t[0], ab, ca});
    next.push_back({ab, t[1], bc});
    next.push_back({ca, bc, t[2]});
    next.push_back({ab, bc, ca});
  }
  m.triangles = std::move(next);
  ++m.level;
}

}  // namespace

double arc_length(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double num = std::abs(a.dot(b.cross(c)));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

void mesh_geometry(TriMesh& m) {
  const std::size_t nt = m.triangles.size();
  const int nv = static_cast<int>(m.vertices.size());
  m.area.assign(nt, 0.0);
  m.circumcenter.assign(nt, Vec3::Zero());
  m.centroid.assign(nt, Vec3::Zero());
  m.first_moment.assign(nt, Vec3::Zero());
  m.neighbor.assign(3 * nt, -1);
  m.side_edge.assign(3 * nt, -1);
  m.normal.assign(3 * nt, Vec3::Zero());
  m.h.assign(3 * nt, 0.0);
  m.h_bar.assign(3 * nt, 0.0);
  m.alpha.assign(3 * nt, 0.0);
  m.edge_vertices.clear();
  m.edge_triangles.clear();
  m.edge_sides.clear();

  std::unordered_map<std::uint64_t, int> edges;
  edges.reserve(nt * 2);
  for (std::size_t i = 0; i < nt; ++i) {
    const auto& t = m.triangles[i];
    for (int j = 0; j < 3; ++j) {
      if (t[j] < 0 || t[j] >= nv) throw InvalidMesh("triangle references a missing vertex");
      const int a = t[j];
      const int b = t[(j + 1) % 3];
      if (a == b) throw InvalidMesh("degenerate triangle " + std::to_string(i));
      const int side = static_cast<int>(3 * i + j);
      auto [it, inserted] = edges.try_emplace(edge_key(a, b), static_cast<int>(m.edge_vertices.size()));
      if (inserted) {
        m.edge_vertices.push_back({a, b});
        m.edge_triangles.push_back({static_cast<int>(i), -1});
        m.edge_sides.push_back({side, -1});
      } else {
        auto& et = m.edge_triangles[it->second];
        if (et[1] != -1) throw InvalidMesh("edge shared by more than two triangles");
        et[1] = static_cast<int>(i);
        m.edge_sides[it->second][1] = side;
      }
      m.side_edge[side] = it->second;
    }
  }

  for (std::size_t i = 0; i < nt; ++i) {
    const auto& t = m.triangles[i];
    const Vec3& a = m.vertices[t[0]];
    const Vec3& b = m.vertices[t[1]];
    const Vec3& c = m.vertices[t[2]];
    const double area = spherical_triangle_area(a, b, c);
    if (!(area > 0.0)) throw InvalidMesh("zero-area triangle " + std::to_string(i));
    m.area[i] = area;
    Vec3 cc = (b - a).cross(c - a);
    if (cc.norm() == 0.0) throw InvalidMesh("collinear triangle " + std::to_string(i));
    cc.normalize();
    if (cc.dot(a) < 0) cc = -cc;
    m.circumcenter[i] = cc;

    Vec3 mom = Vec3::Zero();
    for (int j = 0; j < 3; ++j) {
      const Vec3& p = m.vertices[t[j]];
      const Vec3& q = m.vertices[t[(j + 1) % 3]];
      const Vec3 n = p.cross(q);
      mom += 0.5 * arc_length(p, q) * n.normalized();
    }
    m.first_moment[i] = mom;
    m.centroid[i] = mom.normalized();
  }

  const std::size_t ne = m.edge_vertices.size();
  m.edge_length.assign(ne, 0.0);
  m.edge_chord.assign(ne, 0.0);
  m.edge_midpoint.assign(ne, Vec3::Zero());
  m.edge_normal.assign(ne, Vec3::Zero());
  for (std::size_t e = 0; e < ne; ++e) {
    if (m.edge_triangles[e][1] == -1) throw InvalidMesh("open mesh: boundary edge found");
    const Vec3& a = m.vertices[m.edge_vertices[e][0]];
    const Vec3& b = m.vertices[m.edge_vertices[e][1]];
    m.edge_length[e] = arc_length(a, b);
    m.edge_chord[e] = (a - b).norm();
    m.edge_midpoint[e] = (a + b).normalized();
    // edge_vertices follows side orientation of edge_triangles[e][0]
    m.edge_normal[e] = b.cross(a).normalized();

    const int s0 = m.edge_sides[e][0];
    const int s1 = m.edge_sides[e][1];
    const int t0 = m.edge_triangles[e][0];
    const int t1 = m.edge_triangles[e][1];
    const double h0 = arc_length(m.circumcenter[t0], m.edge_midpoint[e]);
    const double h1 = arc_length(m.circumcenter[t1], m.edge_midpoint[e]);
    m.neighbor[s0] = t1;
    m.neighbor[s1] = t0;
    m.normal[s0] = m.edge_normal[e];
    m.normal[s1] = -m.edge_normal[e];
    m.h[s0] = h0;
    m.h_bar[s0] = h1;
    m.h[s1] = h1;
    m.h_bar[s1] = h0;
    m.alpha[s0] = h0 / (h0 + h1);
    m.alpha[s1] = h1 / (h0 + h1);
  }
}

void validate_mesh(const TriMesh& m) {
  for (const auto& v : m.vertices) {
    if (std::abs(v.norm() - 1.0) > 1e-12) throw InvalidMesh("vertex off the unit sphere");
  }
  for (std::size_t e = 0; e < m.edge_count(); ++e) {
    if (m.edge_triangles[e][1] < 0) throw InvalidMesh("open mesh: boundary edge found");
  }
  for (std::size_t i = 0; i < m.triangle_count(); ++i) {
    const auto& t = m.triangles[i];
    const Vec3& cc = m.circumcenter[i];
    for (int j = 0; j < 3; ++j) {
      const Vec3& a = m.vertices[t[j]];
      const Vec3& b = m.vertices[t[(j + 1) % 3]];
      if (!(cc.dot(a.cross(b)) > 0.0)) {
        throw InvalidMesh("circumcenter outside triangle " + std::to_string(i) +
                          " at level " + std::to_string(m.level));
      }
    }
    for (int j = 0; j < 3; ++j) {
      const double alpha = m.alpha[3 * i + j];
      if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidMesh("distance weight outside (0,1)");
    }
  }
}

TriMesh build_icosphere(int level) {
  if (level < 0 || level > kMaxMeshLevel) {
    throw InvalidParameter("icosphere level must be in [0, " + std::to_string(kMaxMeshLevel) + "]");
  }
  TriMesh m = icosahedron();
  for (int k = 0; k < level; ++k) subdivide(m);
  mesh_geometry(m);
  validate_mesh(m);
  return m;
}

}  // namespace mnp
