#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mnp/cli_runner.hpp"
#include "mnp/error.hpp"

namespace mnp {

namespace {

namespace pt = boost::property_tree;

constexpr double kMu0 = 4e-7 * std::numbers::pi;
constexpr double kDeg = std::numbers::pi / 180.0;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"particle",
       {"rotation", "core_diameter_nm", "hydro_diameter_nm", "anisotropy", "saturation_magnetization", "temperature",
        "viscosity", "gyromagnetic", "damping", "boltzmann", "mu0", "easy_axis", "axis_rotation_axis",
        "axis_rotation_rate"}},
      {"field",
       {"drive", "amplitude_mT", "frequency", "direction", "static_mT", "offset_mT", "pulsed_amplitude_mT",
        "pulsed_frequency", "steps", "shift", "gradient_T_per_m"}},
      {"solver",
       {"discretization", "precession", "rtol", "atol", "max_step", "initial_step", "periods", "samples", "initial",
        "mesh_cache"}},
      {"output", {"directory", "workers", "receive_profiles"}},
      {"sweep", {"fov", "pitch_mm", "pixels", "anisotropies", "axes", "diameters_nm", "discretizations", "reference"}},
      {"dictionary",
       {"diameters_nm", "anisotropies", "angle_offsets_deg", "reference_angles_deg", "amplitude_mT", "frequency",
        "samples_per_period", "warmup_periods", "symmetrize", "precession", "discretization", "rtol", "atol"}},
      {"xspace",
       {"mode", "diameters_nm", "core_diameter_nm", "amplitude_mT", "frequency", "gradient_T_per_m",
        "pulsed_amplitude_mT", "steps", "nodes", "guard", "half_width", "steady_tolerance", "spectral_epsilon",
        "samples_per_half_period", "points_per_interval", "discretization", "rtol", "atol"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw InvalidInput("key '" + key + "': expected a number, got '" + s + "'");
  }
}

long to_long(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw InvalidInput("key '" + key + "': expected an integer, got '" + s + "'");
  }
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "on" || s == "true" || s == "1" || s == "yes") return true;
  if (s == "off" || s == "false" || s == "0" || s == "no") return false;
  throw InvalidInput("key '" + key + "': expected on/off, got '" + s + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& s, double scale = 1.0) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(to_double(key, item) * scale);
  return out;
}

Vec3 to_vec(const std::string& key, const std::string& s, double scale = 1.0) {
  const auto v = to_list(key, s, scale);
  if (v.size() != 3) throw InvalidInput("key '" + key + "': expected three components");
  return Vec3(v[0], v[1], v[2]);
}

std::vector<Vec3> to_vec_list(const std::string& key, const std::string& s) {
  std::vector<Vec3> out;
  for (const auto& item : split(s, ';')) out.push_back(to_vec(key, item));
  return out;
}

Vec3 unit(const std::string& key, const Vec3& v) {
  if (!(v.norm() > 0.0)) throw InvalidInput("key '" + key + "': zero vector");
  return v.normalized();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt_list(const std::vector<double>& v, double scale = 1.0) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i] / scale);
  return s;
}

std::string fmt_vec(const Vec3& v, double scale = 1.0) {
  return fmt(v.x() / scale) + "," + fmt(v.y() / scale) + "," + fmt(v.z() / scale);
}

std::string fmt_vec_list(const std::vector<Vec3>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + fmt_vec(v[i]);
  return s;
}

std::string drive_name(DriveKind d) {
  switch (d) {
    case DriveKind::static_field: return "static";
    case DriveKind::sinusoidal: return "sinusoidal";
    case DriveKind::pulsed: return "pulsed";
  }
  return "sinusoidal";
}

// walks one section, dispatching every key; the handler throws on bad values
template <class Fn>
void section(const pt::ptree& tree, const std::string& name, Fn&& fn) {
  const auto it = tree.find(name);
  if (it == tree.not_found()) return;
  for (const auto& [key, node] : it->second) {
    if (!node.empty()) throw InvalidInput("nested keys are not supported in [" + name + "]");
    fn(key, trim(node.data()));
  }
}

}  // namespace

ParameterGrid default_dictionary_grid() {
  ParameterGrid g;
  for (int d = 16; d <= 58; d += 6) g.diameters.push_back(d * 1e-9);
  for (int k = 500; k <= 6000; k += 500) g.anisotropies.push_back(k);
  g.angle_offsets = {0.0};
  g.reference_angles = {0.0, 45.0 * kDeg, 90.0 * kDeg};
  return g;
}

ScenarioConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidInput(std::string("config syntax: ") + e.what());
  }
  for (const auto& [name, body] : tree) {
    const auto& keys = known_keys();
    const auto sec = keys.find(name);
    if (sec == keys.end()) throw InvalidInput("unknown config section [" + name + "]");
    if (body.empty() && !body.data().empty()) throw InvalidInput("key '" + name + "' outside a section");
    for (const auto& kv : body) {
      if (!sec->second.count(kv.first)) throw InvalidInput("unknown key '" + kv.first + "' in [" + name + "]");
    }
  }

  ScenarioConfig c;
  c.dictionary_grid = default_dictionary_grid();
  c.xspace = default_xspace_config(XspaceMode::sinusoidal);
  c.xspace_diameters = {20e-9, 25e-9, 30e-9};
  PhysicalConstants& k = c.constants;

  section(tree, "particle", [&](const std::string& key, const std::string& v) {
    if (key == "rotation") {
      if (v == "neel") c.rotation = RotationMode::neel;
      else if (v == "brown") c.rotation = RotationMode::brown;
      else throw InvalidInput("rotation must be neel or brown");
    } else if (key == "core_diameter_nm") k.core_diameter = to_double(key, v) * 1e-9;
    else if (key == "hydro_diameter_nm") k.hydro_diameter = to_double(key, v) * 1e-9;
    else if (key == "anisotropy") k.anisotropy = to_double(key, v);
    else if (key == "saturation_magnetization") k.saturation_magnetization = to_double(key, v);
    else if (key == "temperature") k.temperature = to_double(key, v);
    else if (key == "viscosity") k.viscosity = to_double(key, v);
    else if (key == "gyromagnetic") k.gyromagnetic = to_double(key, v);
    else if (key == "damping") k.damping = to_double(key, v);
    else if (key == "boltzmann") k.boltzmann = to_double(key, v);
    else if (key == "mu0") k.mu0 = to_double(key, v);
    else if (key == "easy_axis") c.axis.axis = unit(key, to_vec(key, v));
    else if (key == "axis_rotation_axis") c.axis.rotation_axis = unit(key, to_vec(key, v));
    else if (key == "axis_rotation_rate") c.axis.rate = to_double(key, v);
  });
  const double mu0 = k.mu0;
  section(tree, "field", [&](const std::string& key, const std::string& v) {
    if (key == "drive") {
      if (v == "static") c.drive = DriveKind::static_field;
      else if (v == "sinusoidal") c.drive = DriveKind::sinusoidal;
      else if (v == "pulsed") c.drive = DriveKind::pulsed;
      else throw InvalidInput("drive must be static, sinusoidal or pulsed");
    } else if (key == "amplitude_mT") {
      c.sinusoidal.amplitude = to_double(key, v) * 1e-3 / mu0;
      c.pulsed.amplitude = c.sinusoidal.amplitude;
    } else if (key == "frequency") c.sinusoidal.frequency = to_double(key, v);
    else if (key == "direction") c.sinusoidal.direction = unit(key, to_vec(key, v));
    else if (key == "static_mT") c.static_field = to_vec(key, v, 1e-3 / mu0);
    else if (key == "offset_mT") c.offset = to_vec(key, v, 1e-3 / mu0);
    else if (key == "pulsed_amplitude_mT") c.pulsed.pulsed_amplitude = to_double(key, v) * 1e-3 / mu0;
    else if (key == "pulsed_frequency") c.pulsed.pulsed_frequency = to_double(key, v);
    else if (key == "steps") c.pulsed.steps = static_cast<int>(to_long(key, v));
    else if (key == "shift") c.pulsed.shift = to_double(key, v);
    else if (key == "gradient_T_per_m") c.gradient = to_double(key, v) / mu0;
  });
  section(tree, "solver", [&](const std::string& key, const std::string& v) {
    if (key == "discretization") c.discretization = parse_discretization(v);
    else if (key == "precession") c.precession = to_bool(key, v);
    else if (key == "rtol") c.integrator.rtol = to_double(key, v);
    else if (key == "atol") c.integrator.atol = to_double(key, v);
    else if (key == "max_step") c.integrator.max_step = to_double(key, v);
    else if (key == "initial_step") c.integrator.initial_step = to_double(key, v);
    else if (key == "periods") c.periods = to_double(key, v);
    else if (key == "samples") c.samples = static_cast<std::size_t>(to_long(key, v));
    else if (key == "initial") {
      if (v == "uniform") c.initial = InitialState::uniform;
      else if (v == "equilibrium") c.initial = InitialState::equilibrium;
      else throw InvalidInput("initial must be uniform or equilibrium");
    } else if (key == "mesh_cache") c.mesh_cache = v;
  });
  section(tree, "output", [&](const std::string& key, const std::string& v) {
    if (key == "directory") c.output = v;
    else if (key == "workers") c.workers = static_cast<int>(to_long(key, v));
    else if (key == "receive_profiles") c.receive_profiles = to_vec_list(key, v);
  });
  section(tree, "sweep", [&](const std::string& key, const std::string& v) {
    SweepSettings& s = c.sweep;
    if (key == "fov") {
      const auto f = to_list(key, v);
      if (f.size() != 2 || f[0] < 1 || f[1] < 1 || f[0] != std::floor(f[0]) || f[1] != std::floor(f[1])) {
        throw InvalidInput("fov must be two positive integers");
      }
      s.fov_x = static_cast<int>(f[0]);
      s.fov_y = static_cast<int>(f[1]);
    } else if (key == "pitch_mm") s.pitch = to_double(key, v) * 1e-3;
    else if (key == "pixels") {
      s.pixels.clear();
      for (const auto& item : split(v, ';')) {
        const auto p = to_list(key, item);
        if (p.size() != 2) throw InvalidInput("pixels are ix,iy pairs separated by ';'");
        s.pixels.emplace_back(static_cast<int>(p[0]), static_cast<int>(p[1]));
      }
    } else if (key == "anisotropies") s.anisotropies = to_list(key, v);
    else if (key == "axes") {
      s.axes.clear();
      for (const Vec3& a : to_vec_list(key, v)) s.axes.push_back(unit(key, a));
    } else if (key == "diameters_nm") s.diameters = to_list(key, v, 1e-9);
    else if (key == "discretizations") {
      s.discretizations.clear();
      for (const auto& item : split(v, ',')) s.discretizations.push_back(parse_discretization(item));
    } else if (key == "reference") s.reference = parse_discretization(v);
  });
  section(tree, "dictionary", [&](const std::string& key, const std::string& v) {
    ParameterGrid& g = c.dictionary_grid;
    DictionaryConfig& d = c.dictionary;
    if (key == "diameters_nm") g.diameters = to_list(key, v, 1e-9);
    else if (key == "anisotropies") g.anisotropies = to_list(key, v);
    else if (key == "angle_offsets_deg") g.angle_offsets = to_list(key, v, kDeg);
    else if (key == "reference_angles_deg") g.reference_angles = to_list(key, v, kDeg);
    else if (key == "amplitude_mT") d.amplitude = to_double(key, v) * 1e-3 / mu0;
    else if (key == "frequency") d.frequency = to_double(key, v);
    else if (key == "samples_per_period") d.samples_per_period = static_cast<std::size_t>(to_long(key, v));
    else if (key == "warmup_periods") d.warmup_periods = to_double(key, v);
    else if (key == "symmetrize") d.symmetrize = to_bool(key, v);
    else if (key == "precession") d.precession = to_bool(key, v);
    else if (key == "discretization") d.discretization = parse_discretization(v);
    else if (key == "rtol") d.integrator.rtol = to_double(key, v);
    else if (key == "atol") d.integrator.atol = to_double(key, v);
  });
  std::optional<XspaceMode> xmode;
  section(tree, "xspace", [&](const std::string& key, const std::string& v) {
    if (key == "mode") xmode = parse_xspace_mode(v);
  });
  if (xmode) c.xspace = default_xspace_config(*xmode);
  section(tree, "xspace", [&](const std::string& key, const std::string& v) {
    XspaceConfig& x = c.xspace;
    if (key == "mode") return;
    if (key == "diameters_nm") c.xspace_diameters = to_list(key, v, 1e-9);
    else if (key == "core_diameter_nm") x.core_diameter = to_double(key, v) * 1e-9;
    else if (key == "amplitude_mT") x.trajectory.amplitude = to_double(key, v) * 1e-3 / mu0;
    else if (key == "frequency") x.trajectory.frequency = to_double(key, v);
    else if (key == "gradient_T_per_m") x.trajectory.gradient = to_double(key, v) / mu0;
    else if (key == "pulsed_amplitude_mT") x.trajectory.pulsed_amplitude = to_double(key, v) * 1e-3 / mu0;
    else if (key == "steps") x.trajectory.steps = static_cast<int>(to_long(key, v));
    else if (key == "nodes") x.nodes = static_cast<std::size_t>(to_long(key, v));
    else if (key == "guard") x.guard = to_double(key, v);
    else if (key == "half_width") x.half_width = to_double(key, v);
    else if (key == "steady_tolerance") x.steady_tolerance = to_double(key, v);
    else if (key == "spectral_epsilon") x.spectral_epsilon = to_double(key, v);
    else if (key == "samples_per_half_period") x.samples_per_half_period = static_cast<std::size_t>(to_long(key, v));
    else if (key == "points_per_interval") x.points_per_interval = static_cast<std::size_t>(to_long(key, v));
    else if (key == "discretization") x.discretization = parse_discretization(v);
    else if (key == "rtol") x.integrator.rtol = to_double(key, v);
    else if (key == "atol") x.integrator.atol = to_double(key, v);
  });
  // the staircase shift follows the pulse period unless given
  if (tree.get_child_optional("field.shift") == boost::none) c.pulsed.shift = 0.25 / c.pulsed.pulsed_frequency;
  if (c.xspace.trajectory.mode == XspaceMode::pulsed) c.xspace.trajectory.shift = 0.25 / c.xspace.trajectory.frequency;
  c.xspace.constants = c.constants;
  c.xspace.mesh_cache = c.mesh_cache;
  c.xspace.workers = c.workers;
  c.dictionary.constants = c.constants;
  c.dictionary.mesh_cache = c.mesh_cache;
  c.dictionary.workers = c.workers;

  if (c.workers < 1) throw InvalidParameter("workers must be >= 1");
  if (!(c.periods > 0.0)) throw InvalidParameter("periods must be positive");
  if (c.samples < 2) throw InvalidParameter("samples must be >= 2");
  if (c.receive_profiles.empty()) throw InvalidParameter("at least one receive profile is required");
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_config(const ScenarioConfig& c) {
  const PhysicalConstants& k = c.constants;
  const double mT = 1e-3 / k.mu0;
  std::ostringstream os;
  os << "[particle]\n"
     << "rotation = " << to_string(c.rotation) << "\n"
     << "core_diameter_nm = " << fmt(k.core_diameter / 1e-9) << "\n"
     << "hydro_diameter_nm = " << fmt(k.hydro_diameter / 1e-9) << "\n"
     << "anisotropy = " << fmt(k.anisotropy) << "\n"
     << "saturation_magnetization = " << fmt(k.saturation_magnetization) << "\n"
     << "temperature = " << fmt(k.temperature) << "\n"
     << "viscosity = " << fmt(k.viscosity) << "\n"
     << "gyromagnetic = " << fmt(k.gyromagnetic) << "\n"
     << "damping = " << fmt(k.damping) << "\n"
     << "boltzmann = " << fmt(k.boltzmann) << "\n"
     << "mu0 = " << fmt(k.mu0) << "\n"
     << "easy_axis = " << fmt_vec(c.axis.axis) << "\n"
     << "axis_rotation_axis = " << fmt_vec(c.axis.rotation_axis) << "\n"
     << "axis_rotation_rate = " << fmt(c.axis.rate) << "\n\n";
  os << "[field]\n"
     << "drive = " << drive_name(c.drive) << "\n"
     << "amplitude_mT = " << fmt(c.sinusoidal.amplitude / mT) << "\n"
     << "frequency = " << fmt(c.sinusoidal.frequency) << "\n"
     << "direction = " << fmt_vec(c.sinusoidal.direction) << "\n"
     << "static_mT = " << fmt_vec(c.static_field, mT) << "\n"
     << "offset_mT = " << fmt_vec(c.offset, mT) << "\n"
     << "pulsed_amplitude_mT = " << fmt(c.pulsed.pulsed_amplitude / mT) << "\n"
     << "pulsed_frequency = " << fmt(c.pulsed.pulsed_frequency) << "\n"
     << "steps = " << c.pulsed.steps << "\n"
     << "shift = " << fmt(c.pulsed.shift) << "\n"
     << "gradient_T_per_m = " << fmt(c.gradient * k.mu0) << "\n\n";
  os << "[solver]\n"
     << "discretization = " << to_string(c.discretization) << "\n"
     << "precession = " << (c.precession ? "on" : "off") << "\n"
     << "rtol = " << fmt(c.integrator.rtol) << "\n"
     << "atol = " << fmt(c.integrator.atol) << "\n"
     << "max_step = " << fmt(c.integrator.max_step) << "\n"
     << "initial_step = " << fmt(c.integrator.initial_step) << "\n"
     << "periods = " << fmt(c.periods) << "\n"
     << "samples = " << c.samples << "\n"
     << "initial = " << (c.initial == InitialState::uniform ? "uniform" : "equilibrium") << "\n"
     << "mesh_cache = " << c.mesh_cache.string() << "\n\n";
  os << "[output]\n"
     << "directory = " << c.output.string() << "\n"
     << "workers = " << c.workers << "\n"
     << "receive_profiles = " << fmt_vec_list(c.receive_profiles) << "\n\n";
  const SweepSettings& s = c.sweep;
  os << "[sweep]\n"
     << "fov = " << s.fov_x << "," << s.fov_y << "\n"
     << "pitch_mm = " << fmt(s.pitch / 1e-3) << "\n";
  if (!s.pixels.empty()) {
    os << "pixels = ";
    for (std::size_t i = 0; i < s.pixels.size(); ++i) os << (i ? ";" : "") << s.pixels[i].first << "," << s.pixels[i].second;
    os << "\n";
  }
  if (!s.anisotropies.empty()) os << "anisotropies = " << fmt_list(s.anisotropies) << "\n";
  if (!s.axes.empty()) os << "axes = " << fmt_vec_list(s.axes) << "\n";
  if (!s.diameters.empty()) os << "diameters_nm = " << fmt_list(s.diameters, 1e-9) << "\n";
  if (!s.discretizations.empty()) {
    os << "discretizations = ";
    for (std::size_t i = 0; i < s.discretizations.size(); ++i) os << (i ? "," : "") << to_string(s.discretizations[i]);
    os << "\n";
  }
  if (s.reference) os << "reference = " << to_string(*s.reference) << "\n";
  os << "\n";
  const ParameterGrid& g = c.dictionary_grid;
  const DictionaryConfig& d = c.dictionary;
  os << "[dictionary]\n"
     << "diameters_nm = " << fmt_list(g.diameters, 1e-9) << "\n"
     << "anisotropies = " << fmt_list(g.anisotropies) << "\n"
     << "angle_offsets_deg = " << fmt_list(g.angle_offsets, kDeg) << "\n"
     << "reference_angles_deg = " << fmt_list(g.reference_angles, kDeg) << "\n"
     << "amplitude_mT = " << fmt(d.amplitude / mT) << "\n"
     << "frequency = " << fmt(d.frequency) << "\n"
     << "samples_per_period = " << d.samples_per_period << "\n"
     << "warmup_periods = " << fmt(d.warmup_periods) << "\n"
     << "symmetrize = " << (d.symmetrize ? "on" : "off") << "\n"
     << "precession = " << (d.precession ? "on" : "off") << "\n"
     << "discretization = " << to_string(d.discretization) << "\n"
     << "rtol = " << fmt(d.integrator.rtol) << "\n"
     << "atol = " << fmt(d.integrator.atol) << "\n\n";
  const XspaceConfig& x = c.xspace;
  os << "[xspace]\n"
     << "mode = " << to_string(x.trajectory.mode) << "\n"
     << "diameters_nm = " << fmt_list(c.xspace_diameters, 1e-9) << "\n"
     << "core_diameter_nm = " << fmt(x.core_diameter / 1e-9) << "\n"
     << "amplitude_mT = " << fmt(x.trajectory.amplitude / mT) << "\n"
     << "frequency = " << fmt(x.trajectory.frequency) << "\n"
     << "gradient_T_per_m = " << fmt(x.trajectory.gradient * k.mu0) << "\n"
     << "pulsed_amplitude_mT = " << fmt(x.trajectory.pulsed_amplitude / mT) << "\n"
     << "steps = " << x.trajectory.steps << "\n"
     << "nodes = " << x.nodes << "\n"
     << "guard = " << fmt(x.guard) << "\n"
     << "half_width = " << fmt(x.half_width) << "\n"
     << "steady_tolerance = " << fmt(x.steady_tolerance) << "\n"
     << "spectral_epsilon = " << fmt(x.spectral_epsilon) << "\n"
     << "samples_per_half_period = " << x.samples_per_half_period << "\n"
     << "points_per_interval = " << x.points_per_interval << "\n";
  if (x.discretization) os << "discretization = " << to_string(*x.discretization) << "\n";
  os << "rtol = " << fmt(x.integrator.rtol) << "\n"
     << "atol = " << fmt(x.integrator.atol) << "\n";
  return os.str();
}

}  // namespace mnp
