#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"

#include "mnp/error.hpp"
#include "mnp/sphere_mesh.hpp"

using namespace mnp;

namespace {
constexpr double kPi = std::numbers::pi;

double total_area(const TriMesh& m) {
  double s = 0.0;
  for (double a : m.area) s += a;
  return s;
}
}  // namespace

TEST_CASE("icosphere triangle and vertex counts") {
  const TriMesh m0 = build_icosphere(0);
  CHECK(m0.triangle_count() == 20);
  CHECK(m0.vertex_count() == 12);
  CHECK(m0.edge_count() == 30);
  CHECK(build_icosphere(3).triangle_count() == 1280);
  CHECK(build_icosphere(6).triangle_count() == 81920);
}

TEST_CASE("level 0 triangles have equal area") {
  const TriMesh m = build_icosphere(0);
  for (double a : m.area) CHECK(a == doctest::Approx(4.0 * kPi / 20.0).epsilon(1e-12));
}

TEST_CASE("total area is 4 pi") {
  for (int level : {1, 2, 4}) {
    CHECK(std::abs(total_area(build_icosphere(level)) - 4.0 * kPi) < 1e-9);
  }
}

TEST_CASE("distance weights of the two sides of an edge sum to one") {
  const TriMesh m = build_icosphere(3);
  for (std::size_t e = 0; e < m.edge_count(); ++e) {
    const int s0 = m.edge_sides[e][0], s1 = m.edge_sides[e][1];
    CHECK(std::abs(m.alpha[s0] + m.alpha[s1] - 1.0) < 1e-12);
    CHECK(std::abs(m.h[s0] - m.h_bar[s1]) < 1e-12);
  }
}

TEST_CASE("children cover the parent area") {
  const TriMesh coarse = build_icosphere(2);
  const TriMesh fine = build_icosphere(3);
  for (std::size_t p = 0; p < coarse.triangle_count(); ++p) {
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k) s += fine.area[4 * p + k];
    CHECK(std::abs(s - coarse.area[p]) < 1e-9 * coarse.area[p]);
  }
}

TEST_CASE("mesh invariants") {
  const TriMesh m = build_icosphere(2);
  for (const Vec3& v : m.vertices) CHECK(std::abs(v.norm() - 1.0) < 1e-14);
  for (std::size_t s = 0; s < m.neighbor.size(); ++s) {
    const int t = static_cast<int>(s / 3);
    const int nb = m.neighbor[s];
    REQUIRE(nb >= 0);
    // the neighbor across side s points back at t
    bool back = false;
    for (int j = 0; j < 3; ++j) back = back || m.neighbor[3 * nb + j] == t;
    CHECK(back);
    // outward normal is tangent and points away from the own circumcenter
    const Vec3 mid = m.edge_midpoint[m.side_edge[s]];
    CHECK(std::abs(m.normal[s].dot(mid)) < 1e-12);
    CHECK(m.normal[s].dot(mid - m.circumcenter[t]) > 0.0);
  }
  CHECK_NOTHROW(validate_mesh(m));
}

TEST_CASE("spherical triangle area of an octant") {
  CHECK(spherical_triangle_area(Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()) ==
        doctest::Approx(kPi / 2.0).epsilon(1e-14));
  CHECK(arc_length(Vec3::UnitX(), Vec3::UnitY()) == doctest::Approx(kPi / 2.0));
}

TEST_CASE("degenerate meshes are rejected") {
  TriMesh m = build_icosphere(0);
  m.triangles[0][1] = m.triangles[0][0];
  CHECK_THROWS_AS(mesh_geometry(m), InvalidMesh);

  TriMesh open = build_icosphere(0);
  open.triangles.pop_back();
  CHECK_THROWS_AS(mesh_geometry(open), InvalidMesh);
  CHECK_THROWS_AS(build_icosphere(kMaxMeshLevel + 1), InvalidParameter);
}

TEST_CASE("mesh cache round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "mnp_test_mesh_cache";
  std::filesystem::remove_all(dir);
  const auto a = icosphere(2, dir);
  CHECK(std::filesystem::exists(mesh_cache_file(dir, 2)));
  const auto b = icosphere(2, dir);
  REQUIRE(a->triangle_count() == b->triangle_count());
  for (std::size_t i = 0; i < a->triangle_count(); ++i) {
    CHECK(a->area[i] == b->area[i]);
    CHECK(a->circumcenter[i] == b->circumcenter[i]);
  }
  const TriMesh c = read_mesh_cache(mesh_cache_file(dir, 2));
  CHECK(c.alpha == a->alpha);

  const auto bad = dir / "bad.bin";
  {
    std::FILE* f = std::fopen(bad.c_str(), "wb");
    std::fputs("not a mesh", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(read_mesh_cache(bad), InvalidInput);
  std::filesystem::remove_all(dir);
}
