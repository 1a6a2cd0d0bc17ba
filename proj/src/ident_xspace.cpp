#include "mnp/ident_xspace.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>

// pchip.hpp (Boost 1.74) calls isnan unqualified
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <fftw3.h>

#include "mnp/error.hpp"
#include "mnp/parallel.hpp"

namespace mnp {

namespace {

// FFTW planning is not thread safe
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

class Dft {
public:
  explicit Dft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_complex(n);
    out_ = fftw_alloc_complex(n);
    std::lock_guard<std::mutex> lock(fftw_mutex());
    const int len = static_cast<int>(n);
    forward_ = fftw_plan_dft_1d(len, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(len, in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Dft() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(in_);
    fftw_free(out_);
  }
  Dft(const Dft&) = delete;
  Dft& operator=(const Dft&) = delete;

  std::vector<std::complex<double>> forward(const std::vector<std::complex<double>>& x) { return run(forward_, x); }
  // unnormalized
  std::vector<std::complex<double>> backward(const std::vector<std::complex<double>>& x) { return run(backward_, x); }

private:
  std::vector<std::complex<double>> run(fftw_plan plan, const std::vector<std::complex<double>>& x) {
    for (std::size_t k = 0; k < n_; ++k) {
      in_[k][0] = x[k].real();
      in_[k][1] = x[k].imag();
    }
    fftw_execute(plan);
    std::vector<std::complex<double>> y(n_);
    for (std::size_t k = 0; k < n_; ++k) y[k] = {out_[k][0], out_[k][1]};
    return y;
  }

  std::size_t n_;
  fftw_complex* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

std::vector<std::complex<double>> to_complex(const std::vector<double>& x) {
  return std::vector<std::complex<double>>(x.begin(), x.end());
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& v, std::size_t i0, std::size_t i1) {
  double s = 0.0;
  for (std::size_t k = i0; k < i1; ++k) s += 0.5 * (t[k + 1] - t[k]) * (v[k] + v[k + 1]);
  return s;
}

}  // namespace

std::string to_string(XspaceMode mode) { return mode == XspaceMode::sinusoidal ? "sin" : "pulsed"; }

XspaceMode parse_xspace_mode(const std::string& text) {
  if (text == "sin" || text == "sinusoidal") return XspaceMode::sinusoidal;
  if (text == "pulsed") return XspaceMode::pulsed;
  throw InvalidParameter("unknown x-space mode '" + text + "' (expected sin or pulsed)");
}

void FfpTrajectory::validate() const {
  if (!(amplitude > 0.0)) throw InvalidParameter("FFP amplitude must be positive");
  if (!(frequency > 0.0)) throw InvalidParameter("FFP frequency must be positive");
  if (!(gradient > 0.0)) throw InvalidParameter("gradient strength must be positive");
  if (mode == XspaceMode::pulsed) {
    if (!(pulsed_amplitude > 0.0)) throw InvalidParameter("pulsed amplitude must be positive");
    if (steps < 2) throw InvalidParameter("pulsed steps must be >= 2");
    if (!(shift > 0.0 && shift < period())) throw InvalidParameter("pulsed shift must lie in (0, T_pulsed)");
  }
}

FieldSequence FfpTrajectory::drive() const {
  validate();
  if (mode == XspaceMode::sinusoidal) return sinusoidal_sequence(amplitude, frequency, Vec3::Zero());
  return pulsed_sequence(amplitude, pulsed_amplitude, frequency, steps, shift, Vec3::Zero());
}

// x_FFP = -Q_G^{-1} H_D, so the in-plane components are 2 H / G
double FfpTrajectory::x(double t) const {
  if (mode == XspaceMode::sinusoidal) return range() * std::sin(2.0 * std::numbers::pi * frequency * t);
  return 2.0 * drive().drive_field(t).x() / gradient;
}

double FfpTrajectory::y(double t) const {
  if (mode == XspaceMode::sinusoidal) return 0.0;
  return 2.0 * drive().drive_field(t).y() / gradient;
}

double FfpTrajectory::speed_at(double xbar) const {
  const double R = range();
  if (std::abs(xbar) > R) throw OutOfRange("position lies outside the FFP range");
  return 2.0 * std::numbers::pi * frequency * std::sqrt(R * R - xbar * xbar);
}

std::vector<double> FfpTrajectory::levels() const {
  std::vector<double> out(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) out[static_cast<std::size_t>(i)] = range() * (-1.0 + 2.0 * i / (steps - 1));
  return out;
}

std::vector<double> uniform_nodes(double range, std::size_t count) {
  if (count < 2) throw InvalidParameter("need at least two grid nodes");
  if (!(range > 0.0)) throw InvalidParameter("grid range must be positive");
  std::vector<double> x(count);
  const double h = 2.0 * range / static_cast<double>(count);
  for (std::size_t k = 0; k < count; ++k) x[k] = -range + (static_cast<double>(k) + 0.5) * h;
  return x;
}

GriddedSignal grid_sinusoidal(const std::vector<double>& times, const std::vector<double>& voltage,
                              const FfpTrajectory& trajectory, const std::vector<double>& nodes, double center,
                              double guard) {
  if (times.size() != voltage.size()) throw InvalidInput("voltage samples do not match times");
  if (times.size() < 4) throw InvalidInput("need at least four voltage samples");
  if (!(guard > 0.0 && guard <= 1.0)) throw InvalidParameter("guard band fraction must lie in (0, 1]");
  const double R = trajectory.range();
  const double w = 2.0 * std::numbers::pi * trajectory.frequency;
  if (std::abs(std::sin(w * center)) > 1e-9) throw InvalidParameter("half-period centre is not an FFP zero crossing");
  if (std::cos(w * center) < 0.0) throw InvalidParameter("half-period centre must start a rising half period");

  GriddedSignal g;
  g.nodes = nodes;
  g.values.assign(nodes.size(), 0.0);
  g.valid.assign(nodes.size(), false);
  std::vector<double> tt = times, vv = voltage;
  const double t_lo = tt.front(), t_hi = tt.back();
  boost::math::interpolators::pchip<std::vector<double>> interp(std::move(tt), std::move(vv));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double x = nodes[k];
    if (std::abs(x) > R) throw OutOfRange("grid node lies outside the FFP range");
    if (std::abs(x) > guard * R) continue;
    const double t = center + std::asin(x / R) / w;
    if (t < t_lo || t > t_hi) throw OutOfRange("voltage trace does not cover the half period");
    g.values[k] = interp(t) / trajectory.speed_at(x);
    g.valid[k] = true;
  }
  return g;
}

std::vector<PulseInterval> pulse_intervals(const FfpTrajectory& trajectory, double half_width) {
  trajectory.validate();
  if (trajectory.mode != XspaceMode::pulsed) throw InvalidParameter("pulse intervals need a pulsed trajectory");
  if (!(half_width > 0.0 && half_width < 0.25)) throw InvalidParameter("interval half width must lie in (0, 0.25)");
  const double T = trajectory.period();
  const double w = half_width * T;
  const double horizon = trajectory.shift + trajectory.steps * T;
  std::vector<PulseInterval> out;
  for (long k = 1;; ++k) {
    const double ty = 0.5 * T * static_cast<double>(k);
    if (ty >= horizon) break;
    const int node = staircase_index(ty, T, trajectory.steps, trajectory.shift);
    const double lo = node == 0 ? 0.0 : trajectory.shift + node * T;
    const double hi = node == trajectory.steps - 1 ? horizon : trajectory.shift + (node + 1) * T;
    const bool last = node == trajectory.steps - 1;
    if (!(ty - w > lo) || !(last ? ty + w <= hi : ty + w < hi)) continue;
    out.push_back({ty - w, ty, ty + w, node, (k % 2 == 1) ? 1.0 : -1.0});
  }
  return out;
}

std::vector<double> pulsed_sample_grid(const FfpTrajectory& trajectory, double half_width,
                                       std::size_t points_per_interval) {
  if (points_per_interval < 16) throw InvalidParameter("need at least 16 samples per interval");
  const auto intervals = pulse_intervals(trajectory, half_width);
  const double T = trajectory.period();
  const double eps = 1e-9 * T;
  const std::size_t pre = 8, post = points_per_interval - pre;
  std::vector<double> t;
  for (const auto& iv : intervals) {
    for (std::size_t k = 0; k < pre; ++k) {
      t.push_back(iv.start + (iv.jump - eps - iv.start) * static_cast<double>(k) / (pre - 1));
    }
    // log-spaced after the jump
    const double span = iv.end - iv.jump;
    for (std::size_t k = 0; k < post; ++k) {
      t.push_back(iv.jump + eps * std::pow(span / eps, static_cast<double>(k) / (post - 1)));
    }
    t.back() = iv.end;
  }
  return t;
}

GriddedSignal extract_pulsed(const std::vector<double>& times, const std::vector<double>& voltage,
                             const FfpTrajectory& trajectory, const std::vector<PulseInterval>& intervals,
                             double steady_tolerance) {
  if (times.size() != voltage.size()) throw InvalidInput("voltage samples do not match times");
  GriddedSignal g;
  g.nodes = trajectory.levels();
  const std::size_t N = g.nodes.size();
  std::vector<double> sum(N, 0.0);
  std::vector<int> count(N, 0);
  for (const auto& iv : intervals) {
    const double tol = 1e-12 * trajectory.period();
    const auto first = std::lower_bound(times.begin(), times.end(), iv.start - tol);
    const auto last = std::upper_bound(times.begin(), times.end(), iv.end + tol);
    if (last - first < 2) throw InvalidInput("fewer than two samples inside a pulse interval");
    const auto i0 = static_cast<std::size_t>(first - times.begin());
    const auto i1 = static_cast<std::size_t>(last - times.begin()) - 1;
    double peak = 0.0;
    for (std::size_t k = i0; k <= i1; ++k) peak = std::max(peak, std::abs(voltage[k]));
    if (peak > 0.0 && std::abs(voltage[i1]) >= steady_tolerance * peak) {
      g.warnings.push_back("interval at t=" + std::to_string(iv.jump) + " s did not reach a steady state");
    }
    const auto node = static_cast<std::size_t>(iv.node);
    sum[node] += iv.sign * trapezoid(times, voltage, i0, i1);
    ++count[node];
  }
  g.values.assign(N, 0.0);
  g.valid.assign(N, false);
  for (std::size_t i = 0; i < N; ++i) {
    if (count[i] == 0) {
      g.warnings.push_back("no pulse interval for level " + std::to_string(i));
      continue;
    }
    g.values[i] = sum[i] / count[i];
    g.valid[i] = true;
  }
  return g;
}

std::vector<int> KernelEstimate::centered_shifts() const {
  const int n = static_cast<int>(values.size());
  std::vector<int> s;
  for (int k = -(n / 2); k < n - n / 2; ++k) s.push_back(k);
  return s;
}

std::vector<double> KernelEstimate::centered_values() const {
  const int n = static_cast<int>(values.size());
  std::vector<double> out;
  for (int k : centered_shifts()) out.push_back(values[static_cast<std::size_t>(((k % n) + n) % n)]);
  return out;
}

KernelEstimate estimate_kernel(const std::vector<std::vector<double>>& phantoms,
                               const std::vector<std::vector<double>>& signals, double epsilon) {
  if (phantoms.empty()) throw InvalidInput("at least one phantom is required");
  if (phantoms.size() != signals.size()) throw InvalidInput("phantom and signal counts differ");
  const std::size_t N = phantoms.front().size();
  if (N == 0) throw InvalidInput("empty phantom");
  for (std::size_t j = 0; j < phantoms.size(); ++j) {
    if (phantoms[j].size() != N || signals[j].size() != N) throw InvalidInput("phantoms and signals need one grid");
    bool nonzero = false;
    for (double c : phantoms[j]) nonzero = nonzero || c != 0.0;
    if (!nonzero) throw InvalidInput("phantom is identically zero");
  }
  Dft dft(N);
  std::vector<std::complex<double>> num(N, 0.0);
  std::vector<double> den(N, 0.0);
  for (std::size_t j = 0; j < phantoms.size(); ++j) {
    const auto c = dft.forward(to_complex(phantoms[j]));
    const auto g = dft.forward(to_complex(signals[j]));
    for (std::size_t k = 0; k < N; ++k) {
      num[k] += std::conj(c[k]) * g[k];
      den[k] += std::norm(c[k]);
    }
  }
  KernelEstimate e;
  e.phantom_count = phantoms.size();
  e.denominator = den;
  const double dmax = *std::max_element(den.begin(), den.end());
  std::vector<std::complex<double>> q(N, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    if (den[k] < epsilon * dmax) {
      e.zeroed_bins.push_back(k);
      continue;
    }
    q[k] = num[k] / den[k];
  }
  const auto kappa = dft.backward(q);
  double re = 0.0, im = 0.0;
  e.values.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    e.values[k] = kappa[k].real() / static_cast<double>(N);
    re = std::max(re, std::abs(kappa[k].real()));
    im = std::max(im, std::abs(kappa[k].imag()));
  }
  e.imaginary_residue = re > 0.0 ? im / re : 0.0;
  return e;
}

std::vector<double> circular_convolve(const std::vector<double>& c, const std::vector<double>& kappa) {
  if (c.size() != kappa.size()) throw InvalidInput("convolution operands need one grid");
  const std::size_t N = c.size();
  std::vector<double> g(N, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t m = 0; m < N; ++m) g[k] += kappa[(k + N - m) % N] * c[m];
  }
  return g;
}

void check_phantom_support(const std::vector<double>& c, double guard) {
  const std::size_t N = c.size();
  const auto band = static_cast<std::size_t>(std::ceil(guard * static_cast<double>(N)));
  bool nonzero = false;
  for (std::size_t k = 0; k < N; ++k) {
    if (c[k] == 0.0) continue;
    nonzero = true;
    if (k < band || k + band >= N) throw InvalidInput("phantom support reaches into the boundary guard");
  }
  if (!nonzero) throw InvalidInput("phantom is identically zero");
}

XspaceConfig default_xspace_config(XspaceMode mode) {
  XspaceConfig c;
  c.trajectory.mode = mode;
  if (mode == XspaceMode::pulsed) {
    c.trajectory.frequency = 2500.0;
    c.trajectory.shift = 1.0 / (4.0 * 2500.0);
  }
  return c;
}

std::vector<double> xspace_nodes(const XspaceConfig& config) {
  if (config.trajectory.mode == XspaceMode::pulsed) return config.trajectory.levels();
  return uniform_nodes(config.trajectory.range(), config.nodes);
}

Discretization xspace_discretization(const XspaceConfig& config) {
  if (config.discretization) return *config.discretization;
  return config.trajectory.mode == XspaceMode::sinusoidal ? Discretization{ShDiscretization{24}}
                                                          : Discretization{ShDiscretization{36}};
}

GriddedSignal delta_signal(const XspaceConfig& config, const ParticleModel& model, std::size_t node) {
  const FfpTrajectory& tr = config.trajectory;
  const std::vector<double> nodes = xspace_nodes(config);
  if (node >= nodes.size()) throw OutOfRange("phantom node outside the grid");
  const FieldSequence field = tr.drive().with_offset(tr.selection_field(nodes[node]));
  const double T = tr.period();

  SimulationOptions o;
  o.discretization = xspace_discretization(config);
  o.precession = true;
  o.integrator = config.integrator;
  o.integrator.t0 = 0.0;
  o.compute_derivative = true;
  o.mesh_cache = config.mesh_cache;
  std::vector<PulseInterval> intervals;
  double center = 0.0;
  if (tr.mode == XspaceMode::sinusoidal) {
    // rising half period [3T/4, 5T/4] after a settling quarter
    center = T;
    o.integrator.t_end = 1.25 * T;
    o.integrator.samples = uniform_samples(0.75 * T, 1.25 * T, config.samples_per_half_period);
  } else {
    intervals = pulse_intervals(tr, config.half_width);
    o.integrator.t_end = field.horizon();
    o.integrator.samples = pulsed_sample_grid(tr, config.half_width, config.points_per_interval);
  }
  const SimulationResult r = simulate(model, field, o);
  if (r.status != RunStatus::ok) throw ConvergenceError(to_string(r.status) + ": " + r.message);
  const Vec3 coil = tr.mode == XspaceMode::sinusoidal ? Vec3::UnitX() : Vec3::UnitY();
  const VoltageTrace v = induced_voltage(r.moments, {coil}, 1.0, {}, model.constants.mu0);
  GriddedSignal g = tr.mode == XspaceMode::sinusoidal
                        ? grid_sinusoidal(v.times, v.channels[0], tr, nodes, center, config.guard)
                        : extract_pulsed(v.times, v.channels[0], tr, intervals, config.steady_tolerance);
  for (const auto& w : r.warnings) g.warnings.push_back(w);
  return g;
}

GriddedSignal phantom_signal(const XspaceConfig& config, const ParticleModel& model, const std::vector<double>& c) {
  const std::size_t N = xspace_nodes(config).size();
  if (c.size() != N) throw InvalidInput("phantom does not match the grid");
  std::vector<std::size_t> support;
  for (std::size_t k = 0; k < N; ++k) {
    if (c[k] != 0.0) support.push_back(k);
  }
  if (support.empty()) throw InvalidInput("phantom is identically zero");
  std::vector<GriddedSignal> parts(support.size());
  parallel_for(support.size(), config.workers, [&](std::size_t i) { parts[i] = delta_signal(config, model, support[i]); });
  GriddedSignal g = parts.front();
  std::fill(g.values.begin(), g.values.end(), 0.0);
  g.warnings.clear();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (std::size_t k = 0; k < N; ++k) {
      g.values[k] += c[support[i]] * parts[i].values[k];
      g.valid[k] = g.valid[k] && parts[i].valid[k];
    }
    g.warnings.insert(g.warnings.end(), parts[i].warnings.begin(), parts[i].warnings.end());
  }
  return g;
}

double kernel_fwhm(const std::vector<double>& x, const std::vector<double>& v) {
  if (x.size() != v.size() || v.size() < 3) throw InvalidInput("kernel samples do not match positions");
  std::size_t p = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (std::abs(v[k]) > std::abs(v[p])) p = k;
  }
  const double s = v[p] < 0.0 ? -1.0 : 1.0;
  const double half = 0.5 * s * v[p];
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double left = nan, right = nan;
  for (std::size_t k = p; k > 0; --k) {
    const double a = s * v[k - 1], b = s * v[k];
    if (a < half) {
      left = x[k - 1] + (half - a) / (b - a) * (x[k] - x[k - 1]);
      break;
    }
  }
  for (std::size_t k = p; k + 1 < v.size(); ++k) {
    const double a = s * v[k], b = s * v[k + 1];
    if (b < half) {
      right = x[k] + (a - half) / (a - b) * (x[k + 1] - x[k]);
      break;
    }
  }
  return right - left;
}

double kernel_peak_shift(const std::vector<double>& x, const std::vector<double>& v) {
  if (x.size() != v.size() || v.size() < 3) throw InvalidInput("kernel samples do not match positions");
  std::size_t p = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (std::abs(v[k]) > std::abs(v[p])) p = k;
  }
  if (p == 0 || p + 1 == v.size()) return x[p];
  const double s = v[p] < 0.0 ? -1.0 : 1.0;
  const double a = s * v[p - 1], b = s * v[p], c = s * v[p + 1];
  const double curv = a - 2.0 * b + c;
  if (curv >= 0.0) return x[p];
  const double delta = 0.5 * (a - c) / curv;
  return x[p] + delta * (x[p + 1] - x[p]);
}

KernelResult kernel_for_diameter(const XspaceConfig& config, double hydro_diameter) {
  const auto start = std::chrono::steady_clock::now();
  KernelResult out;
  PhysicalConstants c = config.constants;
  c.hydro_diameter = hydro_diameter;
  c.core_diameter = config.core_diameter > 0.0 ? config.core_diameter : hydro_diameter;
  if (c.core_diameter > c.hydro_diameter) throw InvalidParameter("core diameter exceeds the hydrodynamic diameter");
  out.hydro_diameter = c.hydro_diameter;
  out.core_diameter = c.core_diameter;
  const ParticleModel model = brown_params(c);

  const std::vector<double> nodes = xspace_nodes(config);
  const std::size_t N = nodes.size();
  const std::size_t k0 = N / 2;
  std::vector<double> phantom(N, 0.0);
  phantom[k0] = 1.0;
  check_phantom_support(phantom);
  const GriddedSignal g = delta_signal(config, model, k0);
  out.warnings = g.warnings;
  out.estimate = estimate_kernel({phantom}, {g.values}, config.spectral_epsilon);
  out.estimate.spacing = nodes[1] - nodes[0];
  const std::vector<double> centered = out.estimate.centered_values();
  for (int s : out.estimate.centered_shifts()) out.positions.push_back(s * out.estimate.spacing);
  std::size_t p = 0;
  for (std::size_t k = 1; k < centered.size(); ++k) {
    if (std::abs(centered[k]) > std::abs(centered[p])) p = k;
  }
  out.raw_peak = centered[p];
  if (out.raw_peak == 0.0) throw ConvergenceError("kernel estimate is identically zero");
  for (double v : centered) out.normalized.push_back(v / out.raw_peak);
  out.fwhm = kernel_fwhm(out.positions, out.normalized);
  out.peak_shift = kernel_peak_shift(out.positions, out.normalized);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<KernelResult> kernel_study(const XspaceConfig& config, const std::vector<double>& hydro_diameters) {
  if (hydro_diameters.empty()) throw InvalidParameter("kernel study needs at least one diameter");
  std::vector<KernelResult> out(hydro_diameters.size());
  parallel_for(hydro_diameters.size(), config.workers,
               [&](std::size_t i) { out[i] = kernel_for_diameter(config, hydro_diameters[i]); });
  return out;
}

}  // namespace mnp
