#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "mnp/error.hpp"
#include "mnp/field_model.hpp"

namespace mnp {

struct IntegratorConfig {
  double rtol = 1e-6;
  double atol = 1e-9;
  double initial_step = 0.0;  // 0: estimate from the initial derivative
  double max_step = 0.0;      // 0: unlimited
  double t0 = 0.0;
  double t_end = 0.0;
  std::vector<double> samples;  // strictly increasing, inside [t0, t_end]
  int min_order = 3;
  int max_order = 4;
  std::size_t max_steps = 2000000;
  bool store_states = true;
  // Treat x[i] and x[i + n/2] as one complex component in the error norm
  // (for real-stacked complex systems).
  bool paired_halves = false;
};

struct IntegratorStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t assemblies = 0;
  std::size_t rate_assemblies = 0;
  std::size_t factorizations = 0;
  std::size_t linear_solves = 0;
  double wall_seconds = 0.0;
};

// x'(t) = M(t) x(t).  assemble writes values into a matrix that has the
// pattern of `pattern`; the pattern must contain the diagonal.  assemble_rate
// (optional) writes dM/dt.  Drive discontinuities are listed in breakpoints.
template <class Scalar>
struct LinearSystem {
  using Matrix = Eigen::SparseMatrix<Scalar>;
  Matrix pattern;
  std::function<void(double, Side, Matrix&)> assemble;
  std::function<void(double, Matrix&)> assemble_rate;
  std::vector<double> breakpoints;
};

template <class Scalar>
struct Trajectory {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  std::vector<double> times;
  std::vector<Vector> states;
  Vector final_state;
  double final_time = 0.0;
  IntegratorStats stats;
};

template <class Scalar>
using SampleObserver = std::function<void(std::size_t, double, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>&)>;

namespace rodas {
// L-stable, stiffly accurate Rosenbrock 4(3) (Hairer-Wanner RODAS set).
constexpr double gamma = 0.25;
constexpr double c2 = 0.386, c3 = 0.21, c4 = 0.63;
constexpr double d1 = 0.25, d2 = -0.1043, d3 = 0.1035, d4 = -0.3620000000000023e-01;
constexpr double a21 = 1.544;
constexpr double a31 = 0.9466785280815826, a32 = 0.2557011698983284;
constexpr double a41 = 3.314825187068521, a42 = 2.896124015972201, a43 = 0.9986419139977817;
constexpr double a51 = 1.221224509226641, a52 = 6.019134481288629, a53 = 12.53708332932087,
                 a54 = -0.687886036105895;
constexpr double c21 = -5.6688;
constexpr double c31 = -2.430093356833875, c32 = -0.2063599157091915;
constexpr double c41 = -0.1073529058151375, c42 = -9.594562251023355, c43 = -20.47028614809616;
constexpr double c51 = 7.496443313967647, c52 = -10.24680431464352, c53 = -33.99990352819905,
                 c54 = 11.7089089320616;
constexpr double c61 = 8.083246795921522, c62 = -7.981132988064893, c63 = -31.52159432874371,
                 c64 = 16.31930543123136, c65 = -6.058818238834054;
constexpr double e21 = 10.12623508344586, e22 = -7.487995877610167, e23 = -34.80091861555747,
                 e24 = -7.992771707568823, e25 = 1.025137723295662;
constexpr double e31 = -0.6762803392801253, e32 = 6.087714651680015, e33 = 16.43084320892478,
                 e34 = 24.76722511418386, e35 = -6.594389125716872;
}  // namespace rodas

namespace detail {

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }

template <class Vector>
double error_norm(const Vector& err, const Vector& x_old, const Vector& x_new, const IntegratorConfig& cfg) {
  const Eigen::Index n = err.size();
  double acc = 0.0;
  if (cfg.paired_halves) {
    const Eigen::Index h = n / 2;
    for (Eigen::Index i = 0; i < h; ++i) {
      const double xo = std::hypot(magnitude(x_old(i)), magnitude(x_old(i + h)));
      const double xn = std::hypot(magnitude(x_new(i)), magnitude(x_new(i + h)));
      const double sk = cfg.atol + cfg.rtol * std::max(xo, xn);
      const double e = std::hypot(magnitude(err(i)), magnitude(err(i + h))) / sk;
      acc += e * e;
    }
    return std::sqrt(acc / std::max<Eigen::Index>(h, 1));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sk = cfg.atol + cfg.rtol * std::max(magnitude(x_old(i)), magnitude(x_new(i)));
    const double e = magnitude(err(i)) / sk;
    acc += e * e;
  }
  return std::sqrt(acc / std::max<Eigen::Index>(n, 1));
}

template <class Vector>
bool all_finite(const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(magnitude(v(i)))) return false;
  }
  return true;
}

}  // namespace detail

/**
 * Adaptive Rosenbrock integration of a sparse linear time-varying system.
 * One sparse LU of (I/(gamma h) - M(t)) per step attempt; the symbolic
 * analysis is done once.  Steps never cross breakpoints.
 */
template <class Scalar>
Trajectory<Scalar> integrate(const LinearSystem<Scalar>& sys, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x0,
                             const IntegratorConfig& cfg, const SampleObserver<Scalar>& observer = {}) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::SparseMatrix<Scalar>;
  namespace R = rodas;

  const auto wall_start = std::chrono::steady_clock::now();
  if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0)) throw InvalidParameter("integrator tolerances must be positive");
  if (!(cfg.t_end > cfg.t0)) throw InvalidParameter("integration horizon must be positive");
  if (cfg.min_order > 4 || cfg.max_order < 4) throw InvalidParameter("order bounds exclude the order-4 method");
  for (std::size_t k = 0; k < cfg.samples.size(); ++k) {
    const double s = cfg.samples[k];
    if (s < cfg.t0 || s > cfg.t_end) throw InvalidParameter("sample outside the integration interval");
    if (k > 0 && !(s > cfg.samples[k - 1])) throw InvalidParameter("samples must be strictly increasing");
  }
  if (!sys.assemble) throw InvalidParameter("linear system has no assembly function");
  if (x0.size() != sys.pattern.rows() || sys.pattern.rows() != sys.pattern.cols()) {
    throw InvalidInput("state size does not match the system");
  }
  if (!detail::all_finite(x0)) throw InvalidInput("initial state is not finite");

  const Eigen::Index n = x0.size();
  Matrix m_start = sys.pattern;
  m_start.makeCompressed();
  std::vector<Eigen::Index> diag(static_cast<std::size_t>(n), -1);
  for (Eigen::Index c = 0; c < m_start.outerSize(); ++c) {
    for (typename Matrix::InnerIterator it(m_start, c); it; ++it) {
      if (it.row() == it.col()) diag[static_cast<std::size_t>(c)] = &it.valueRef() - m_start.valuePtr();
    }
  }
  for (auto d : diag) {
    if (d < 0) throw InvalidInput("system pattern must contain the diagonal");
  }
  Matrix m_stage = m_start, m_end = m_start, m_rate = m_start, w = m_start;

  std::vector<double> breaks;
  for (double b : sys.breakpoints) {
    if (b > cfg.t0 && b < cfg.t_end) breaks.push_back(b);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.push_back(cfg.t_end);
  std::size_t next_break = 0;

  Trajectory<Scalar> traj;
  IntegratorStats& st = traj.stats;
  std::size_t next_sample = 0;
  auto emit = [&](double t, const Vector& x) {
    if (cfg.store_states) {
      traj.times.push_back(t);
      traj.states.push_back(x);
    } else {
      traj.times.push_back(t);
    }
    if (observer) observer(next_sample, t, x);
    ++next_sample;
  };
  while (next_sample < cfg.samples.size() && cfg.samples[next_sample] <= cfg.t0) emit(cfg.t0, x0);

  Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;

  Vector x = x0, dxdt(n), dfdt(n), g1(n), g2(n), g3(n), g4(n), g5(n), err(n), xt(n), ft(n), xnew(n);
  Vector cont3(n), cont4(n);
  double t = cfg.t0;
  const double span = cfg.t_end - cfg.t0;

  auto rate_at = [&](double tt, Side side_m, const Matrix& m_here) {
    if (sys.assemble_rate) {
      sys.assemble_rate(tt, m_rate);
      ++st.rate_assemblies;
      dfdt = m_rate * x;
      return;
    }
    // forward difference inside the current smooth piece
    double delta = std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(std::abs(tt), span * 1e-3);
    double limit = breaks[next_break];
    double sgn = 1.0;
    if (tt + delta >= limit) sgn = -1.0;
    sys.assemble(tt + sgn * delta, sgn > 0 ? Side::exact : side_m, m_rate);
    ++st.assemblies;
    dfdt = (m_rate * x - m_here * x) / (sgn * delta);
  };

  auto scaled_norm = [&](const Vector& v) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sk = cfg.atol + cfg.rtol * detail::magnitude(x(i));
      const double e = detail::magnitude(v(i)) / sk;
      acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(n));
  };

  bool have_start = false;  // m_start valid for t with right-side limit
  auto start_matrix = [&]() {
    if (!have_start) {
      sys.assemble(t, Side::right, m_start);
      ++st.assemblies;
      have_start = true;
    }
  };

  auto initial_step = [&]() {
    start_matrix();
    const Vector f0 = m_start * x;
    const double d0 = scaled_norm(x), d1 = scaled_norm(f0);
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
    return std::min(h, span);
  };

  double h = cfg.initial_step > 0.0 ? cfg.initial_step : initial_step();
  if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);
  bool first = true, last_rejected = false;
  double h_old = 0.0, err_old = 0.0;

  while (t < cfg.t_end) {
    const double limit = breaks[next_break];
    bool hits_break = false;
    double h_try = h;
    if (t + h_try >= limit || (limit - (t + h_try)) < 1e-12 * span) {
      h_try = limit - t;
      hits_break = true;
    }
    const double min_step = 1e-14 * std::max(std::abs(t), span);
    if (h_try < min_step) {
      throw StiffnessFailure("step size underflow at t = " + std::to_string(t), t);
    }
    if (st.accepted + st.rejected >= cfg.max_steps) {
      throw StiffnessFailure("step budget exhausted at t = " + std::to_string(t), t);
    }
    const Side end_side = hits_break ? Side::left : Side::exact;
    const double t_new = hits_break ? limit : t + h_try;

    start_matrix();
    dxdt = m_start * x;
    rate_at(t, Side::right, m_start);

    // W = I / (gamma h) - M(t)
    w = m_start;
    {
      Scalar* wv = w.valuePtr();
      const Scalar* mv = m_start.valuePtr();
      for (Eigen::Index k = 0; k < w.nonZeros(); ++k) wv[k] = -mv[k];
      const double shift = 1.0 / (R::gamma * h_try);
      for (auto d : diag) wv[d] += shift;
    }
    if (!analyzed) {
      lu.analyzePattern(w);
      analyzed = true;
    }
    lu.factorize(w);
    ++st.factorizations;
    bool ok = lu.info() == Eigen::Success;

    double err_norm = std::numeric_limits<double>::infinity();
    if (ok) {
      auto solve = [&](Vector& v) {
        v = lu.solve(v);
        ++st.linear_solves;
      };
      const double hi = 1.0 / h_try;
      g1 = dxdt + (h_try * R::d1) * dfdt;
      solve(g1);

      xt = x + R::a21 * g1;
      sys.assemble(t + R::c2 * h_try, Side::exact, m_stage);
      ++st.assemblies;
      g2 = m_stage * xt + (h_try * R::d2) * dfdt + (R::c21 * hi) * g1;
      solve(g2);

      xt = x + R::a31 * g1 + R::a32 * g2;
      sys.assemble(t + R::c3 * h_try, Side::exact, m_stage);
      ++st.assemblies;
      g3 = m_stage * xt + (h_try * R::d3) * dfdt + hi * (R::c31 * g1 + R::c32 * g2);
      solve(g3);

      xt = x + R::a41 * g1 + R::a42 * g2 + R::a43 * g3;
      sys.assemble(t + R::c4 * h_try, Side::exact, m_stage);
      ++st.assemblies;
      g4 = m_stage * xt + (h_try * R::d4) * dfdt + hi * (R::c41 * g1 + R::c42 * g2 + R::c43 * g3);
      solve(g4);

      xt = x + R::a51 * g1 + R::a52 * g2 + R::a53 * g3 + R::a54 * g4;
      sys.assemble(t_new, end_side, m_end);
      ++st.assemblies;
      g5 = m_end * xt + hi * (R::c51 * g1 + R::c52 * g2 + R::c53 * g3 + R::c54 * g4);
      solve(g5);

      xt += g5;
      err = m_end * xt + hi * (R::c61 * g1 + R::c62 * g2 + R::c63 * g3 + R::c64 * g4 + R::c65 * g5);
      solve(err);
      xnew = xt + err;
      err_norm = detail::error_norm(err, x, xnew, cfg);
      if (!std::isfinite(err_norm)) ok = false;
    }

    if (!ok) {
      ++st.rejected;
      last_rejected = true;
      h = h_try / 5.0;
      continue;
    }

    constexpr double safe = 0.9, fac1 = 5.0, fac2 = 1.0 / 6.0;
    double fac = std::max(fac2, std::min(fac1, std::pow(err_norm, 0.25) / safe));
    double h_new = h_try / fac;
    if (err_norm > 1.0) {
      ++st.rejected;
      last_rejected = true;
      h = h_new;
      continue;
    }

    if (!first) {
      double fac_pred = (h_old / h_try) * std::pow(err_norm * err_norm / err_old, 0.25) / safe;
      fac_pred = std::max(fac2, std::min(fac1, fac_pred));
      fac = std::max(fac, fac_pred);
      h_new = h_try / fac;
    }
    first = false;
    h_old = h_try;
    err_old = std::max(0.01, err_norm);
    if (last_rejected) h_new = std::min(h_new, h_try);
    last_rejected = false;
    ++st.accepted;

    if (!detail::all_finite(xnew)) throw DivergenceError("non-finite state at t = " + std::to_string(t_new), t_new);

    // dense output for samples in (t, t_new]
    if (next_sample < cfg.samples.size() && cfg.samples[next_sample] <= t_new) {
      cont3 = R::e21 * g1 + R::e22 * g2 + R::e23 * g3 + R::e24 * g4 + R::e25 * g5;
      cont4 = R::e31 * g1 + R::e32 * g2 + R::e33 * g3 + R::e34 * g4 + R::e35 * g5;
      while (next_sample < cfg.samples.size() && cfg.samples[next_sample] <= t_new) {
        const double s_t = cfg.samples[next_sample];
        if (s_t == t_new) {
          emit(s_t, xnew);
          continue;
        }
        const double th = (s_t - t) / h_try;
        const double th1 = 1.0 - th;
        Vector xs = x * th1 + th * (xnew + th1 * (cont3 + th * cont4));
        emit(s_t, xs);
      }
    }

    x = xnew;
    t = t_new;
    if (hits_break) {
      ++next_break;
      have_start = false;
      if (t < cfg.t_end) {
        // restart the controller after a drive discontinuity
        h = std::min(h_new, initial_step());
        first = true;
      }
    } else {
      std::swap(m_start, m_end);
      have_start = true;
      h = h_new;
    }
    if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);
  }

  traj.final_state = x;
  traj.final_time = t;
  st.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return traj;
}

// Stationary state of a static system: solves M x = 0 with the mass row
// weights . x = weights . x0 replacing the row where |weights| is largest.
// Throws ConvergenceError when the residual exceeds tol * |M| |x|.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> steady_state(const Eigen::SparseMatrix<Scalar>& m,
                                                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x0,
                                                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights,
                                                      double tol = 1e-10) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::SparseMatrix<Scalar>;
  const Eigen::Index n = m.rows();
  if (x0.size() != n || weights.size() != n) throw InvalidInput("steady_state size mismatch");
  Eigen::Index pin = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (detail::magnitude(weights(i)) > best) {
      best = detail::magnitude(weights(i));
      pin = i;
    }
  }
  if (!(best > 0.0)) throw InvalidInput("mass weights are zero");
  std::vector<Eigen::Triplet<Scalar>> t;
  t.reserve(static_cast<std::size_t>(m.nonZeros() + n));
  for (Eigen::Index c = 0; c < m.outerSize(); ++c) {
    for (typename Matrix::InnerIterator it(m, c); it; ++it) {
      if (it.row() != pin) t.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (weights(j) != Scalar(0)) t.emplace_back(pin, j, weights(j));
  }
  Matrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  Vector b = Vector::Zero(n);
  b(pin) = weights.dot(x0);
  Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw ConvergenceError("steady state: singular constrained system");
  Vector x = lu.solve(b);
  if (!detail::all_finite(x)) throw ConvergenceError("steady state: non-finite solution");
  double mnorm = 0.0;
  for (Eigen::Index c = 0; c < m.outerSize(); ++c) {
    for (typename Matrix::InnerIterator it(m, c); it; ++it) mnorm = std::max(mnorm, detail::magnitude(it.value()));
  }
  const double resid = (m * x).cwiseAbs().maxCoeff();
  const double scale = mnorm * x.cwiseAbs().maxCoeff();
  if (resid > tol * scale) {
    throw ConvergenceError("steady state residual " + std::to_string(resid / scale) + " above tolerance");
  }
  return x;
}

extern template Trajectory<double> integrate<double>(const LinearSystem<double>&, const Eigen::VectorXd&,
                                                     const IntegratorConfig&, const SampleObserver<double>&);
extern template Trajectory<std::complex<double>> integrate<std::complex<double>>(
    const LinearSystem<std::complex<double>>&, const Eigen::VectorXcd&, const IntegratorConfig&,
    const SampleObserver<std::complex<double>>&);

}  // namespace mnp
