#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>

#include "mnp/error.hpp"
#include "mnp/sphere_mesh.hpp"

namespace mnp {

namespace {

constexpr char kMagic[8] = {'M', 'N', 'P', 'M', 'E', 'S', 'H', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

class Writer {
public:
  explicit Writer(const std::filesystem::path& f) : out_(f, std::ios::binary) {
    if (!out_) throw InvalidInput("cannot write mesh cache " + f.string());
  }
  template <class T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void vec3s(const std::vector<Vec3>& vs) {
    for (const auto& v : vs) {
      put(v.x());
      put(v.y());
      put(v.z());
    }
  }
  template <class T>
  void scalars(const std::vector<T>& vs) {
    for (T v : vs) put(v);
  }
  template <class T, std::size_t K>
  void tuples(const std::vector<std::array<T, K>>& vs) {
    for (const auto& a : vs)
      for (T v : a) put(v);
  }
  void finish() {
    out_.flush();
    if (!out_) throw InvalidInput("mesh cache write failed");
  }

private:
  std::ofstream out_;
};

class Reader {
public:
  explicit Reader(const std::filesystem::path& f) : in_(f, std::ios::binary) {
    if (!in_) throw InvalidInput("cannot open mesh cache " + f.string());
  }
  template <class T>
  T get() {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw InvalidInput("truncated mesh cache");
    return to_little(v);
  }
  std::vector<Vec3> vec3s(std::size_t n) {
    std::vector<Vec3> vs(n);
    for (auto& v : vs) {
      const double x = get<double>();
      const double y = get<double>();
      const double z = get<double>();
      v = Vec3(x, y, z);
    }
    return vs;
  }
  template <class T>
  std::vector<T> scalars(std::size_t n) {
    std::vector<T> vs(n);
    for (auto& v : vs) v = get<T>();
    return vs;
  }
  template <class T, std::size_t K>
  std::vector<std::array<T, K>> tuples(std::size_t n) {
    std::vector<std::array<T, K>> vs(n);
    for (auto& a : vs)
      for (auto& v : a) v = get<T>();
    return vs;
  }
  std::istream& stream() { return in_; }

private:
  std::ifstream in_;
};

}  // namespace

void write_mesh_cache(const TriMesh& m, const std::filesystem::path& file) {
  Writer w(file);
  for (char c : kMagic) w.put(c);
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(m.level));
  w.put(static_cast<std::uint64_t>(m.vertex_count()));
  w.put(static_cast<std::uint64_t>(m.triangle_count()));
  w.put(static_cast<std::uint64_t>(m.edge_count()));
  w.vec3s(m.vertices);
  w.tuples<int, 3>(m.triangles);
  w.scalars(m.area);
  w.vec3s(m.circumcenter);
  w.vec3s(m.centroid);
  w.vec3s(m.first_moment);
  w.scalars(m.neighbor);
  w.scalars(m.side_edge);
  w.vec3s(m.normal);
  w.scalars(m.h);
  w.scalars(m.h_bar);
  w.scalars(m.alpha);
  w.tuples<int, 2>(m.edge_vertices);
  w.tuples<int, 2>(m.edge_triangles);
  w.tuples<int, 2>(m.edge_sides);
  w.scalars(m.edge_length);
  w.scalars(m.edge_chord);
  w.vec3s(m.edge_midpoint);
  w.vec3s(m.edge_normal);
  w.finish();
}

TriMesh read_mesh_cache(const std::filesystem::path& file) {
  Reader r(file);
  for (char c : kMagic) {
    if (r.get<char>() != c) throw InvalidInput("not a mesh cache file: " + file.string());
  }
  if (r.get<std::uint32_t>() != kVersion) throw InvalidInput("unsupported mesh cache version");
  TriMesh m;
  m.level = static_cast<int>(r.get<std::uint32_t>());
  const auto nv = r.get<std::uint64_t>();
  const auto nt = r.get<std::uint64_t>();
  const auto ne = r.get<std::uint64_t>();
  if (m.level > kMaxMeshLevel || nt != 20ull << (2 * m.level) || nv != 10ull * (1ull << (2 * m.level)) + 2 ||
      ne != 30ull << (2 * m.level)) {
    throw InvalidInput("mesh cache header is inconsistent");
  }
  m.vertices = r.vec3s(nv);
  m.triangles = r.tuples<int, 3>(nt);
  m.area = r.scalars<double>(nt);
  m.circumcenter = r.vec3s(nt);
  m.centroid = r.vec3s(nt);
  m.first_moment = r.vec3s(nt);
  m.neighbor = r.scalars<int>(3 * nt);
  m.side_edge = r.scalars<int>(3 * nt);
  m.normal = r.vec3s(3 * nt);
  m.h = r.scalars<double>(3 * nt);
  m.h_bar = r.scalars<double>(3 * nt);
  m.alpha = r.scalars<double>(3 * nt);
  m.edge_vertices = r.tuples<int, 2>(ne);
  m.edge_triangles = r.tuples<int, 2>(ne);
  m.edge_sides = r.tuples<int, 2>(ne);
  m.edge_length = r.scalars<double>(ne);
  m.edge_chord = r.scalars<double>(ne);
  m.edge_midpoint = r.vec3s(ne);
  m.edge_normal = r.vec3s(ne);
  return m;
}

std::filesystem::path mesh_cache_file(const std::filesystem::path& dir, int level) {
  return dir / ("icosphere_L" + std::to_string(level) + ".bin");
}

std::shared_ptr<const TriMesh> icosphere(int level, const std::filesystem::path& cache_dir) {
  static std::mutex mutex;
  static std::map<int, std::weak_ptr<const TriMesh>> live;
  std::lock_guard<std::mutex> lock(mutex);
  if (auto hit = live[level].lock()) return hit;

  std::shared_ptr<const TriMesh> mesh;
  if (!cache_dir.empty()) {
    const auto file = mesh_cache_file(cache_dir, level);
    if (std::filesystem::exists(file)) {
      TriMesh m = read_mesh_cache(file);
      if (m.level != level) throw InvalidInput("mesh cache level mismatch in " + file.string());
      mesh = std::make_shared<const TriMesh>(std::move(m));
    } else {
      TriMesh m = build_icosphere(level);
      std::filesystem::create_directories(cache_dir);
      const auto tmp = file.string() + ".tmp";
      write_mesh_cache(m, tmp);
      std::filesystem::rename(tmp, file);
      mesh = std::make_shared<const TriMesh>(std::move(m));
    }
  } else {
    mesh = std::make_shared<const TriMesh>(build_icosphere(level));
  }
  live[level] = mesh;
  return mesh;
}

}  // namespace mnp
