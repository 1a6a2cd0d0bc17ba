#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "mnp/cli_runner.hpp"
#include "mnp/error.hpp"

namespace mnp {

std::string content_hash(const std::string& text) {
  const std::string blob = "blob " + std::to_string(text.size()) + std::string(1, '\0') + text;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, blob.data(), blob.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("SHA-1 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

ParticleModel scenario_model(const ScenarioConfig& c) { return make_model(c.rotation, c.constants); }

FieldSequence scenario_field(const ScenarioConfig& c) {
  switch (c.drive) {
    case DriveKind::static_field: return FieldSequence(StaticDrive{}, c.static_field + c.offset, c.axis);
    case DriveKind::sinusoidal: return FieldSequence(c.sinusoidal, c.offset, c.axis);
    case DriveKind::pulsed: return FieldSequence(c.pulsed, c.offset, c.axis);
  }
  throw InvalidParameter("unknown drive");
}

SimulationOptions scenario_options(const ScenarioConfig& c, const FieldSequence& field) {
  SimulationOptions o;
  o.discretization = c.discretization;
  o.precession = c.precession;
  o.integrator = c.integrator;
  o.integrator.t0 = 0.0;
  const double span = c.drive == DriveKind::pulsed ? field.horizon() : field.period();
  o.integrator.t_end = c.periods * span;
  o.integrator.samples = uniform_samples(0.0, o.integrator.t_end, c.samples);
  o.integrator.store_states = false;
  o.initial = c.initial;
  o.compute_derivative = true;
  o.mesh_cache = c.mesh_cache;
  return o;
}

Vec3 pixel_position(const SweepSettings& s, int ix, int iy) {
  if (ix < 0 || iy < 0 || ix >= s.fov_x || iy >= s.fov_y) throw OutOfRange("pixel outside the field of view");
  return Vec3((ix - 0.5 * (s.fov_x - 1)) * s.pitch, (iy - 0.5 * (s.fov_y - 1)) * s.pitch, 0.0);
}

Vec3 selection_field(double gradient, const Vec3& x) {
  return gradient * Vec3(-0.5 * x.x(), -0.5 * x.y(), x.z());
}

nlohmann::json to_json(const RunReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["status"] = to_string(r.status);
  j["message"] = r.message;
  j["wall_seconds"] = r.wall_seconds;
  j["config_hash"] = r.config_hash;
  j["max_moment_ratio"] = r.max_moment_ratio;
  j["unphysical"] = r.unphysical;
  j["warnings"] = r.warnings;
  j["solver"] = {{"accepted", r.stats.accepted},         {"rejected", r.stats.rejected},
                 {"assemblies", r.stats.assemblies},     {"factorizations", r.stats.factorizations},
                 {"linear_solves", r.stats.linear_solves}, {"integrator_seconds", r.stats.wall_seconds}};
  return j;
}

RunReport make_report(const std::string& name, const SimulationResult& r, const std::string& hash) {
  RunReport rep;
  rep.name = name;
  rep.status = r.status;
  rep.message = r.message;
  rep.wall_seconds = r.wall_seconds;
  rep.stats = r.stats;
  rep.config_hash = hash;
  rep.max_moment_ratio = r.max_moment_ratio;
  rep.unphysical = r.max_moment_ratio > 1.0 + 1e-6;
  rep.warnings = r.warnings;
  return rep;
}

void write_trajectory_csv(const std::filesystem::path& path, const MomentTrajectory& m, const VoltageTrace* voltage) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error("cannot write " + path.string());
  std::fputs("t,mx,my,mz,dmx,dmy,dmz", f);
  const std::size_t nch = voltage ? voltage->channels.size() : 0;
  for (std::size_t c = 0; c < nch; ++c) std::fprintf(f, ",v_ch%zu", c + 1);
  std::fputc('\n', f);
  for (std::size_t k = 0; k < m.size(); ++k) {
    const Vec3& x = m.moment[k];
    const Vec3 d = m.has_derivative() ? m.derivative[k] : Vec3::Zero();
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", m.times[k], x.x(), x.y(), x.z(), d.x(), d.y(), d.z());
    for (std::size_t c = 0; c < nch; ++c) std::fprintf(f, ",%.17g", voltage->channels[c][k]);
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw Error("cannot write " + path.string());
}

MomentTrajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,mx,my,mz,dmx,dmy,dmz", 0) != 0) {
    throw InvalidInput(path.string() + " is not a trajectory CSV");
  }
  MomentTrajectory m;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    double v[7];
    for (double& x : v) {
      if (!std::getline(ss, cell, ',')) throw InvalidInput("short row in " + path.string());
      x = std::stod(cell);
    }
    m.times.push_back(v[0]);
    m.moment.emplace_back(v[1], v[2], v[3]);
    m.derivative.emplace_back(v[4], v[5], v[6]);
  }
  return m;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // write then rename, so a reader never sees half a file
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write " + tmp.string());
    out << j.dump(2) << "\n";
    if (!out) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

RunReport run_single(const ScenarioConfig& config, const std::filesystem::path& out) {
  const std::string text = canonical_config(config);
  const std::string hash = content_hash(text);
  std::filesystem::create_directories(out);
  {
    std::ofstream cfg(out / "config.ini");
    cfg << text;
  }
  const FieldSequence field = scenario_field(config);
  const SimulationResult r = simulate(scenario_model(config), field, scenario_options(config, field));
  const VoltageTrace v = induced_voltage(r.moments, config.receive_profiles, 1.0, {}, config.constants.mu0);
  write_trajectory_csv(out / "trajectory.csv", r.moments, &v);
  const RunReport rep = make_report("simulate", r, hash);
  nlohmann::json j = to_json(rep);
  j["discretization"] = to_string(config.discretization);
  j["precession"] = config.precession;
  j["max_mass_error"] = r.max_mass_error;
  write_json(out / "report.json", j);
  return rep;
}

}  // namespace mnp
