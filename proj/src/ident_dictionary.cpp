#include "mnp/ident_dictionary.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "mnp/error.hpp"

namespace mnp {

namespace {

constexpr char kMagic[8] = {'M', 'N', 'P', 'D', 'I', 'C', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void check_increasing(const std::vector<double>& v, const char* name) {
  if (v.empty()) throw InvalidParameter(std::string(name) + " grid is empty");
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) throw InvalidParameter(std::string(name) + " grid must be strictly increasing");
  }
}

std::vector<double> default_relative_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 30; ++k) g.push_back(std::pow(10.0, -4.0 + 6.0 * k / 30.0));
  return g;
}

// column scales and the restriction to usable columns
struct Reduced {
  std::vector<std::size_t> cols;
  Eigen::MatrixXd A;
  Eigen::VectorXd scale;  // A_full(:, cols[i]) = A(:, i) * scale(i)
};

Reduced reduce(const Dictionary& d, bool normalize) {
  Reduced r;
  r.cols = d.usable_columns();
  if (r.cols.empty()) throw InvalidInput("dictionary has no usable columns");
  r.A.resize(d.matrix.rows(), static_cast<Eigen::Index>(r.cols.size()));
  r.scale.resize(static_cast<Eigen::Index>(r.cols.size()));
  for (std::size_t i = 0; i < r.cols.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(r.cols[i]);
    const double s = normalize ? d.matrix.col(c).norm() : 1.0;
    r.A.col(static_cast<Eigen::Index>(i)) = d.matrix.col(c) / s;
    r.scale(static_cast<Eigen::Index>(i)) = s;
  }
  return r;
}

Eigen::VectorXd expand(const Dictionary& d, const Reduced& r, const Eigen::VectorXd& w_reduced) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d.matrix.cols());
  for (std::size_t i = 0; i < r.cols.size(); ++i) {
    w(static_cast<Eigen::Index>(r.cols[i])) = w_reduced(static_cast<Eigen::Index>(i)) / r.scale(static_cast<Eigen::Index>(i));
  }
  return w;
}

// Unpenalized nonnegative refit on the support of w (reduced coordinates).
Eigen::VectorXd refit(const Reduced& r, const Eigen::VectorXd& v, const Eigen::VectorXd& w, double threshold,
                      const LassoOptions& lasso) {
  const double wmax = w.size() > 0 ? w.maxCoeff() : 0.0;
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) > 0.0 && w(i) >= threshold * wmax) support.push_back(i);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(w.size());
  if (support.empty()) return out;
  Eigen::MatrixXd S(r.A.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) S.col(static_cast<Eigen::Index>(k)) = r.A.col(support[k]);
  const WeightFit f = nn_lasso(S, v, 0.0, lasso);
  for (std::size_t k = 0; k < support.size(); ++k) out(support[k]) = f.weights(static_cast<Eigen::Index>(k));
  return out;
}

void finish_fit(const Dictionary& d, const Eigen::VectorXd& v, WeightFit& fit) {
  const Eigen::VectorXd res = d.matrix * fit.weights - v;
  fit.residual_norm = res.norm();
  fit.objective = res.squaredNorm() + fit.beta * fit.weights.sum();
  fit.residual_per_angle.clear();
  const auto block = static_cast<Eigen::Index>(d.rows_per_angle());
  for (Eigen::Index r0 = 0; block > 0 && r0 < res.size(); r0 += block) {
    fit.residual_per_angle.push_back(res.segment(r0, block).norm());
  }
}

}  // namespace

void ParameterGrid::validate() const {
  check_increasing(diameters, "diameter");
  check_increasing(anisotropies, "anisotropy");
  check_increasing(angle_offsets, "angle offset");
  if (reference_angles.empty()) throw InvalidParameter("at least one reference angle is required");
  if (diameters.front() <= 0.0) throw InvalidParameter("diameters must be positive");
  if (anisotropies.front() < 0.0) throw InvalidParameter("anisotropies must be nonnegative");
  const std::size_t n = angle_offsets.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(angle_offsets[i] + angle_offsets[n - 1 - i]) > 1e-12) {
      throw InvalidParameter("angle offset grid must be symmetric about 0");
    }
  }
}

std::vector<std::size_t> Dictionary::usable_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].ok && matrix.col(static_cast<Eigen::Index>(c)).cwiseAbs().maxCoeff() > 0.0) out.push_back(c);
  }
  return out;
}

Vec3 easy_axis_at(double phi) { return Vec3(std::cos(phi), std::sin(phi), 0.0); }

std::vector<double> dictionary_signal(const DictionaryConfig& config, double diameter, double anisotropy, double phi,
                                      std::vector<double>* times) {
  PhysicalConstants c = config.constants;
  c.core_diameter = diameter;
  c.hydro_diameter = std::max(c.hydro_diameter, diameter);
  c.anisotropy = anisotropy;
  const ParticleModel model = neel_params(c);
  const FieldSequence field = sinusoidal_sequence(config.amplitude, config.frequency, Vec3::Zero(), easy_axis_at(phi));
  if (config.samples_per_period < 3) throw InvalidParameter("need at least three samples per period");
  if (config.warmup_periods < 0) throw InvalidParameter("warm-up periods must be nonnegative");

  const double T = field.period();
  const double t0 = config.warmup_periods * T;
  std::vector<double> grid(config.samples_per_period);
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = t0 + T * static_cast<double>(k) / grid.size();

  SimulationOptions o;
  o.discretization = config.discretization;
  o.precession = config.precession;
  o.integrator = config.integrator;
  o.integrator.t0 = 0.0;
  o.integrator.t_end = t0 + T;
  o.integrator.samples = grid;
  o.compute_derivative = true;
  o.mesh_cache = config.mesh_cache;
  const SimulationResult r = simulate(model, field, o);
  if (r.status != RunStatus::ok) throw ConvergenceError(to_string(r.status) + ": " + r.message);

  std::vector<double> psi(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) psi[k] = -c.mu0 * r.moments.derivative[k].x();
  if (times) {
    times->resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) (*times)[k] = grid[k] - t0;
  }
  return psi;
}

Dictionary build_dictionary(const ParameterGrid& grid, const DictionaryConfig& config) {
  grid.validate();
  Dictionary d;
  d.grid = grid;
  d.discretization = to_string(config.discretization);
  const std::size_t S = config.samples_per_period;
  const std::size_t J = grid.reference_angles.size();
  const std::size_t nphi = grid.angle_offsets.size();
  d.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S * J), static_cast<Eigen::Index>(grid.column_count()));
  d.columns.resize(grid.column_count());
  {
    const double T = 1.0 / config.frequency;
    d.times.resize(S);
    for (std::size_t k = 0; k < S; ++k) d.times[k] = T * static_cast<double>(k) / S;
  }

  // one task per (D, K); the angles it needs are solved once each
  const std::size_t tasks = grid.diameters.size() * grid.anisotropies.size();
  std::atomic<std::size_t> next{0};
  std::mutex out_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= tasks) return;
      const std::size_t iD = task / grid.anisotropies.size();
      const std::size_t iK = task % grid.anisotropies.size();
      const double D = grid.diameters[iD], K = grid.anisotropies[iK];
      std::map<long long, std::vector<double>> cache;
      std::string failure;
      const auto start = std::chrono::steady_clock::now();
      auto psi = [&](double phi) -> const std::vector<double>& {
        const auto key = static_cast<long long>(std::llround(phi * 1e12));
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, dictionary_signal(config, D, K, phi)).first;
        return it->second;
      };
      std::vector<Eigen::VectorXd> cols(nphi, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(S * J)));
      try {
        for (std::size_t ip = 0; ip < nphi; ++ip) {
          const double dphi = grid.angle_offsets[ip];
          for (std::size_t j = 0; j < J; ++j) {
            const double ref = grid.reference_angles[j];
            auto seg = cols[ip].segment(static_cast<Eigen::Index>(j * S), static_cast<Eigen::Index>(S));
            const std::vector<double>& plus = psi(ref + dphi);
            if (config.symmetrize) {
              const std::vector<double>& minus = psi(ref - dphi);
              for (std::size_t k = 0; k < S; ++k) seg(static_cast<Eigen::Index>(k)) = 0.5 * (plus[k] + minus[k]);
            } else {
              for (std::size_t k = 0; k < S; ++k) seg(static_cast<Eigen::Index>(k)) = plus[k];
            }
          }
        }
      } catch (const Error& e) {
        failure = e.what();
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::lock_guard<std::mutex> lock(out_mutex);
      for (std::size_t ip = 0; ip < nphi; ++ip) {
        const std::size_t c = (iD * grid.anisotropies.size() + iK) * nphi + ip;
        ColumnInfo& info = d.columns[c];
        info.index = c;
        info.diameter = D;
        info.anisotropy = K;
        info.angle_offset = grid.angle_offsets[ip];
        info.wall_seconds = secs / static_cast<double>(nphi);
        if (!failure.empty()) {
          info.ok = false;
          info.status = failure;
          continue;
        }
        d.matrix.col(static_cast<Eigen::Index>(c)) = cols[ip];
        if (cols[ip].cwiseAbs().maxCoeff() == 0.0) {
          info.ok = false;
          info.status = "all-zero column";
        } else {
          info.status = "ok";
        }
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(config.workers, static_cast<int>(tasks)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return d;
}

Eigen::VectorXd stack_signals(const std::vector<std::vector<double>>& signals) {
  std::size_t n = 0;
  for (const auto& s : signals) n += s.size();
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  Eigen::Index k = 0;
  for (const auto& s : signals) {
    for (double x : s) v(k++) = x;
  }
  return v;
}

void save_dictionary(const Dictionary& d, const std::filesystem::path& stem) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  std::filesystem::path bin = stem;
  bin += ".bin";
  std::filesystem::path manifest = stem;
  manifest += ".json";
  {
    std::ofstream f(bin, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidInput("cannot write " + bin.string());
    const std::uint64_t rows = static_cast<std::uint64_t>(d.matrix.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(d.matrix.cols());
    f.write(kMagic, sizeof kMagic);
    f.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
    f.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    f.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    f.write(reinterpret_cast<const char*>(d.matrix.data()), static_cast<std::streamsize>(rows * cols * sizeof(double)));
    if (!f) throw InvalidInput("failed writing " + bin.string());
  }
  nlohmann::json j;
  j["format"] = "mnp-dictionary";
  j["version"] = kVersion;
  j["rows"] = d.matrix.rows();
  j["cols"] = d.matrix.cols();
  j["discretization"] = d.discretization;
  j["times"] = d.times;
  j["grid"] = {{"diameters", d.grid.diameters},
               {"anisotropies", d.grid.anisotropies},
               {"angle_offsets", d.grid.angle_offsets},
               {"reference_angles", d.grid.reference_angles}};
  nlohmann::json cols = nlohmann::json::array();
  for (const ColumnInfo& c : d.columns) {
    cols.push_back({{"index", c.index},
                    {"diameter", c.diameter},
                    {"anisotropy", c.anisotropy},
                    {"angle_offset", c.angle_offset},
                    {"ok", c.ok},
                    {"status", c.status},
                    {"wall_seconds", c.wall_seconds}});
  }
  j["columns"] = cols;
  std::ofstream f(manifest, std::ios::trunc);
  if (!f) throw InvalidInput("cannot write " + manifest.string());
  f << j.dump(1) << "\n";
}

Dictionary load_dictionary(const std::filesystem::path& stem) {
  std::filesystem::path bin = stem;
  bin += ".bin";
  std::filesystem::path manifest = stem;
  manifest += ".json";
  std::ifstream mf(manifest);
  if (!mf) throw InvalidInput("cannot read " + manifest.string());
  nlohmann::json j;
  try {
    mf >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("bad dictionary manifest: " + std::string(e.what()));
  }
  Dictionary d;
  try {
    d.discretization = j.at("discretization").get<std::string>();
    d.times = j.at("times").get<std::vector<double>>();
    const auto& g = j.at("grid");
    d.grid.diameters = g.at("diameters").get<std::vector<double>>();
    d.grid.anisotropies = g.at("anisotropies").get<std::vector<double>>();
    d.grid.angle_offsets = g.at("angle_offsets").get<std::vector<double>>();
    d.grid.reference_angles = g.at("reference_angles").get<std::vector<double>>();
    for (const auto& c : j.at("columns")) {
      ColumnInfo info;
      info.index = c.at("index").get<std::size_t>();
      info.diameter = c.at("diameter").get<double>();
      info.anisotropy = c.at("anisotropy").get<double>();
      info.angle_offset = c.at("angle_offset").get<double>();
      info.ok = c.at("ok").get<bool>();
      info.status = c.at("status").get<std::string>();
      info.wall_seconds = c.at("wall_seconds").get<double>();
      d.columns.push_back(info);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("bad dictionary manifest: " + std::string(e.what()));
  }
  std::ifstream f(bin, std::ios::binary);
  if (!f) throw InvalidInput("cannot read " + bin.string());
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t rows = 0, cols = 0;
  f.read(magic, sizeof magic);
  f.read(reinterpret_cast<char*>(&version), sizeof version);
  f.read(reinterpret_cast<char*>(&rows), sizeof rows);
  f.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!f || std::memcmp(magic, kMagic, sizeof magic) != 0 || version != kVersion) {
    throw InvalidInput("not a dictionary matrix file: " + bin.string());
  }
  if (cols != d.columns.size() || rows != d.times.size() * d.grid.reference_angles.size() ||
      cols != d.grid.column_count()) {
    throw InvalidInput("dictionary matrix does not match its manifest");
  }
  d.matrix.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  f.read(reinterpret_cast<char*>(d.matrix.data()), static_cast<std::streamsize>(rows * cols * sizeof(double)));
  if (!f) throw InvalidInput("truncated dictionary matrix: " + bin.string());
  return d;
}

WeightFit fit_weights(const Dictionary& d, const Eigen::VectorXd& v, double beta, const FitOptions& options) {
  if (v.size() != d.matrix.rows()) throw InvalidInput("signal length does not match the dictionary");
  const Reduced r = reduce(d, options.normalize_columns);
  WeightFit f = nn_lasso(r.A, v, beta, options.lasso);
  Eigen::VectorXd w = f.weights;
  if (options.refit_support) w = refit(r, v, w, options.support_threshold, options.lasso);
  f.weights = expand(d, r, w);
  finish_fit(d, v, f);
  return f;
}

AutoFit fit_weights_auto(const Dictionary& d, const Eigen::VectorXd& v, const FitOptions& options) {
  if (v.size() != d.matrix.rows()) throw InvalidInput("signal length does not match the dictionary");
  const Reduced r = reduce(d, options.normalize_columns);
  const double scale = (r.A.transpose() * v).cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw InvalidInput("signal is orthogonal to the dictionary");
  std::vector<double> rel = options.selection.relative_grid.empty() ? default_relative_grid()
                                                                      : options.selection.relative_grid;
  std::sort(rel.begin(), rel.end());

  AutoFit out;
  std::vector<Eigen::VectorXd> ws;
  for (double g : rel) {
    const double beta = g * scale;
    const WeightFit f = nn_lasso(r.A, v, beta, options.lasso);
    Eigen::VectorXd w = f.weights;
    if (options.refit_support) w = refit(r, v, w, options.support_threshold, options.lasso);
    out.betas.push_back(beta);
    out.residuals.push_back((r.A * w - v).norm());
    std::size_t s = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) s += w(i) > 0.0 ? 1 : 0;
    out.support_sizes.push_back(s);
    ws.push_back(w);
  }
  out.noise_norm = options.selection.noise_norm > 0.0 ? options.selection.noise_norm : out.residuals.front();
  std::size_t pick = 0;
  for (std::size_t k = 0; k < rel.size(); ++k) {
    if (out.residuals[k] <= options.selection.safety * out.noise_norm) pick = k;
  }
  Eigen::VectorXd w = ws[pick];
  if (options.prune_below_noise) {
    // drop, one at a time, columns whose whole contribution is below the noise level
    for (;;) {
      Eigen::Index weakest = -1;
      double least = out.noise_norm;
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double part = w(i) * r.A.col(i).norm();
        if (w(i) > 0.0 && part < least) least = part, weakest = i;
      }
      if (weakest < 0) break;
      w(weakest) = 0.0;
      w = refit(r, v, w, 0.0, options.lasso);
    }
  }
  out.fit.beta = out.betas[pick];
  out.fit.weights = expand(d, r, w);
  out.fit.converged = true;
  finish_fit(d, v, out.fit);
  return out;
}

std::vector<double> Marginals::diameter_histogram() const {
  std::vector<double> h(by_diameter.size(), 0.0);
  if (total > 0.0) {
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = by_diameter[i] / total;
  }
  return h;
}

std::vector<double> Marginals::anisotropy_histogram() const {
  std::vector<double> h(by_anisotropy.size(), 0.0);
  if (total > 0.0) {
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = by_anisotropy[i] / total;
  }
  return h;
}

Marginals marginals(const Eigen::VectorXd& w, const ParameterGrid& grid) {
  if (static_cast<std::size_t>(w.size()) != grid.column_count()) throw InvalidInput("weights do not match the grid");
  Marginals m;
  m.diameters = grid.diameters;
  m.anisotropies = grid.anisotropies;
  m.by_diameter.assign(grid.diameters.size(), 0.0);
  m.by_anisotropy.assign(grid.anisotropies.size(), 0.0);
  const std::size_t nK = grid.anisotropies.size(), nP = grid.angle_offsets.size();
  for (Eigen::Index c = 0; c < w.size(); ++c) {
    const auto u = static_cast<std::size_t>(c);
    const std::size_t iD = u / (nK * nP);
    const std::size_t iK = (u / nP) % nK;
    m.by_diameter[iD] += w(c);
    m.by_anisotropy[iK] += w(c);
    m.total += w(c);
  }
  return m;
}

}  // namespace mnp
