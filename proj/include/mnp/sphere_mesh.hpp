#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mnp {

using Vec3 = Eigen::Vector3d;

/**
 * Icosphere triangulation of the unit sphere with the geometry the
 * finite-volume scheme consumes.
 *
 * Triangle sides are addressed as 3*i + j, where side j of triangle i
 * runs from vertex j to vertex (j+1)%3.  Triangles are counter-clockwise
 * seen from outside.
 */
struct TriMesh {
  int level = 0;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  // per triangle
  std::vector<double> area;          // spherical excess, steradians
  std::vector<Vec3> circumcenter;    // spherical circumcenter
  std::vector<Vec3> centroid;        // direction of the first moment
  std::vector<Vec3> first_moment;    // integral of m over the triangle

  // per triangle side
  std::vector<int> neighbor;
  std::vector<int> side_edge;
  std::vector<Vec3> normal;          // tangent at edge midpoint, pointing out of the triangle
  std::vector<double> h;             // own circumcenter to edge midpoint
  std::vector<double> h_bar;         // neighbor circumcenter to edge midpoint
  std::vector<double> alpha;         // h / (h + h_bar)

  // per edge; edge_triangles[e][0] is the side that defines edge_normal
  std::vector<std::array<int, 2>> edge_vertices;
  std::vector<std::array<int, 2>> edge_triangles;
  std::vector<std::array<int, 2>> edge_sides;
  std::vector<double> edge_length;   // arc length
  std::vector<double> edge_chord;
  std::vector<Vec3> edge_midpoint;
  std::vector<Vec3> edge_normal;

  std::size_t triangle_count() const { return triangles.size(); }
  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t edge_count() const { return edge_vertices.size(); }
};

constexpr int kMaxMeshLevel = 8;

// Recursive midpoint subdivision of the icosahedron.  Children of triangle p
// are stored at 4p..4p+3.  Geometry is populated and validated.
TriMesh build_icosphere(int level);

// Fills edges, areas, circumcenters, normals, h, h_bar, alpha from
// vertices and triangles.  Throws InvalidMesh on degenerate input.
void mesh_geometry(TriMesh& mesh);

// Checks closedness and the circumcenter-in-interior requirement.
void validate_mesh(const TriMesh& mesh);

double arc_length(const Vec3& a, const Vec3& b);
double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

// Versioned little-endian cache.
void write_mesh_cache(const TriMesh& mesh, const std::filesystem::path& file);
TriMesh read_mesh_cache(const std::filesystem::path& file);
std::filesystem::path mesh_cache_file(const std::filesystem::path& dir, int level);

// Loads level from dir when present, otherwise builds and stores it.
// An empty dir disables caching.
std::shared_ptr<const TriMesh> icosphere(int level, const std::filesystem::path& cache_dir = {});

}  // namespace mnp
