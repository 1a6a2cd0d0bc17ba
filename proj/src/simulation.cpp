#include "mnp/simulation.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "mnp/error.hpp"

namespace mnp {

namespace {

struct Tracker {
  double m0;
  SimulationResult* out;
  void moment(double t, const Vec3& m, const Vec3* dm) {
    out->moments.times.push_back(t);
    out->moments.moment.push_back(m);
    if (dm) out->moments.derivative.push_back(*dm);
    out->max_moment_ratio = std::max(out->max_moment_ratio, m.norm() / m0);
  }
};

void finish(SimulationResult& r, const std::chrono::steady_clock::time_point start) {
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (r.status == RunStatus::ok && r.max_moment_ratio > 1.0 + 1e-6) {
    r.status = RunStatus::unphysical;
    std::ostringstream msg;
    msg << "mean moment magnitude reached " << r.max_moment_ratio << " m0";
    r.message = msg.str();
  }
}

IntegratorConfig resolve(const IntegratorConfig& in, const FieldSequence& field) {
  IntegratorConfig cfg = in;
  if (!(cfg.t_end > cfg.t0)) cfg.t_end = cfg.t0 + field.horizon();
  if (cfg.samples.empty()) cfg.samples = uniform_samples(cfg.t0, cfg.t_end, 1001);
  if (cfg.max_step <= 0.0 && !std::holds_alternative<StaticDrive>(field.drive())) {
    // keep at least a few steps per drive period
    cfg.max_step = field.period() / 8.0;
  }
  cfg.store_states = false;
  return cfg;
}

template <class Scalar, class Op, class Moment>
void run(const Op& op, const FieldSequence& field, const SimulationOptions& options,
         const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights, Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x0,
         const Moment& moment_of, const std::function<void(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>&)>& audit,
         SimulationResult& result, double m0) {
  using Matrix = Eigen::SparseMatrix<Scalar>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const IntegratorConfig cfg = resolve(options.integrator, field);

  LinearSystem<Scalar> sys;
  sys.pattern = op.pattern();
  sys.assemble = [&](double t, Side side, Matrix& m) { op.assemble(field.field(t, side), field.easy_axis(t), m); };
  sys.assemble_rate = [&](double t, Matrix& m) {
    if constexpr (std::is_same_v<Scalar, double>) {
      op.assemble_rate(field.field(t), field.field_rate(t), field.easy_axis(t), field.easy_axis_rate(t), m);
    } else {
      op.assemble_rate(field.field_rate(t), field.easy_axis(t), field.easy_axis_rate(t), m);
    }
  };
  sys.breakpoints = field.breakpoints(cfg.t0, cfg.t_end);

  if (options.initial == InitialState::equilibrium) {
    Matrix m0mat = op.pattern();
    op.assemble(field.field(cfg.t0, Side::right), field.easy_axis(cfg.t0), m0mat);
    x0 = steady_state<Scalar>(m0mat, x0, weights);
  }

  Tracker tracker{m0, &result};
  Matrix m_sample = op.pattern();
  SampleObserver<Scalar> observer = [&](std::size_t, double t, const Vector& x) {
    const Vec3 m = moment_of(x);
    if (options.compute_derivative) {
      op.assemble(field.field(t), field.easy_axis(t), m_sample);
      const Vector dx = m_sample * x;
      const Vec3 dm = moment_of(dx);
      tracker.moment(t, m, &dm);
    } else {
      tracker.moment(t, m, nullptr);
    }
    const double mass = std::abs(weights.dot(x) - Scalar(1.0));
    result.max_mass_error = std::max(result.max_mass_error, mass);
    audit(x);
  };

  try {
    Trajectory<Scalar> traj = integrate<Scalar>(sys, x0, cfg, observer);
    result.stats = traj.stats;
  } catch (const StiffnessFailure& e) {
    result.status = RunStatus::stiffness_failure;
    result.message = e.what();
  } catch (const DivergenceError& e) {
    result.status = RunStatus::divergence;
    result.message = e.what();
  }
}

}  // namespace

Discretization parse_discretization(const std::string& text) {
  auto fail = [&]() -> Discretization {
    throw InvalidInput("discretization must be sh:N or fv:level[:beta], got '" + text + "'");
  };
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  try {
    if (parts.size() == 2 && parts[0] == "sh") {
      std::size_t used = 0;
      const int n = std::stoi(parts[1], &used);
      if (used != parts[1].size()) return fail();
      return ShDiscretization{n};
    }
    if ((parts.size() == 2 || parts.size() == 3) && parts[0] == "fv") {
      std::size_t used = 0;
      FvDiscretization fv;
      fv.level = std::stoi(parts[1], &used);
      if (used != parts[1].size()) return fail();
      if (parts.size() == 3) {
        fv.beta = std::stod(parts[2], &used);
        if (used != parts[2].size()) return fail();
      }
      return fv;
    }
  } catch (const std::logic_error&) {
    return fail();
  }
  return fail();
}

std::string to_string(const Discretization& d) {
  if (const auto* sh = std::get_if<ShDiscretization>(&d)) return "sh:" + std::to_string(sh->n_max);
  const auto& fv = std::get<FvDiscretization>(d);
  std::ostringstream s;
  s << "fv:" << fv.level << ":" << fv.beta;
  return s.str();
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::stiffness_failure: return "stiffness-failure";
    case RunStatus::divergence: return "divergence";
    case RunStatus::unphysical: return "unphysical";
  }
  return "unknown";
}

std::vector<double> uniform_samples(double t0, double t1, std::size_t count) {
  if (count < 2) throw InvalidParameter("need at least two samples");
  std::vector<double> s(count);
  for (std::size_t k = 0; k < count; ++k) s[k] = t0 + (t1 - t0) * static_cast<double>(k) / (count - 1);
  s.back() = t1;
  return s;
}

SimulationResult simulate(const ParticleModel& model, const FieldSequence& field, const SimulationOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  SimulationResult result;
  result.moments.m0 = model.m0;
  if (const auto* sh = std::get_if<ShDiscretization>(&options.discretization)) {
    const ShOperator op(sh->n_max, model, options.precession);
    ShVector w = ShVector::Zero(op.size());
    w(0) = 4.0 * std::numbers::pi;
    const ShVector x0 = sh_initial_uniform(sh->n_max).coefficients;
    auto moment_of = [&](const ShVector& x) { return mean_moment_sh(x, model.m0); };
    std::function<void(const ShVector&)> audit = [&](const ShVector& x) {
      result.max_truncation_ratio = std::max(result.max_truncation_ratio, sh_truncation_ratio(x));
      result.max_reality_defect = std::max(result.max_reality_defect, sh_reality_defect(x));
      result.max_imaginary_moment = std::max(result.max_imaginary_moment, moment_imaginary_residue_sh(x));
    };
    run<Complex>(op, field, options, w, x0, moment_of, audit, result, model.m0);
    if (result.max_truncation_ratio > kShTruncationThreshold) {
      std::ostringstream msg;
      msg << "truncation: energy fraction " << result.max_truncation_ratio << " in the top two degrees of N_max="
          << sh->n_max;
      result.warnings.push_back(msg.str());
    }
  } else {
    const auto& fv = std::get<FvDiscretization>(options.discretization);
    const FvOperator op(icosphere(fv.level, options.mesh_cache), model, fv.beta, options.precession);
    const Eigen::VectorXd w = op.mass_weights();
    const Eigen::VectorXd x0 = fv_initial_uniform(op.mesh_ptr()).u;
    result.min_cell_value = x0.minCoeff();
    auto moment_of = [&](const Eigen::VectorXd& x) { return mean_moment_fv(op.mesh(), x, model.m0); };
    std::function<void(const Eigen::VectorXd&)> audit = [&](const Eigen::VectorXd& x) {
      result.min_cell_value = std::min(result.min_cell_value, x.minCoeff());
    };
    run<double>(op, field, options, w, x0, moment_of, audit, result, model.m0);
  }
  finish(result, start);
  return result;
}

Vec3 equilibrium_moment(const ParticleModel& model, const Vec3& H, const Vec3& n, const Discretization& disc,
                        bool precession, const std::filesystem::path& mesh_cache) {
  if (const auto* sh = std::get_if<ShDiscretization>(&disc)) {
    const ShOperator op(sh->n_max, model, precession);
    ShVector w = ShVector::Zero(op.size());
    w(0) = 4.0 * std::numbers::pi;
    const ShVector x = steady_state<Complex>(op.assemble(H, n), sh_initial_uniform(sh->n_max).coefficients, w);
    return mean_moment_sh(x, model.m0);
  }
  const auto& fv = std::get<FvDiscretization>(disc);
  const FvOperator op(icosphere(fv.level, mesh_cache), model, fv.beta, precession);
  const Eigen::VectorXd x =
      steady_state<double>(op.assemble(H, n), fv_initial_uniform(op.mesh_ptr()).u, op.mass_weights());
  return mean_moment_fv(op.mesh(), x, model.m0);
}

OperatorDump dump_operator(const ParticleModel& model, const FieldSequence& field, const SimulationOptions& options,
                           double t) {
  OperatorDump d;
  const Vec3 H = field.field(t);
  const Vec3 n = field.easy_axis(t);
  if (const auto* sh = std::get_if<ShDiscretization>(&options.discretization)) {
    const ShMatrix m = ShOperator(sh->n_max, model, options.precession).assemble(H, n);
    d.rows = m.rows();
    for (int c = 0; c < m.outerSize(); ++c)
      for (ShMatrix::InnerIterator it(m, c); it; ++it) d.entries.emplace_back(it.row(), it.col(), it.value());
  } else {
    const auto& fv = std::get<FvDiscretization>(options.discretization);
    const FvMatrix m =
        FvOperator(icosphere(fv.level, options.mesh_cache), model, fv.beta, options.precession).assemble(H, n);
    d.rows = m.rows();
    for (int c = 0; c < m.outerSize(); ++c)
      for (FvMatrix::InnerIterator it(m, c); it; ++it) d.entries.emplace_back(it.row(), it.col(), it.value());
  }
  return d;
}

}  // namespace mnp
