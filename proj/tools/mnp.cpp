#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "mnp/acceptance/criteria.hpp"
#include "mnp/cli_runner.hpp"
#include "mnp/error.hpp"

namespace {

using namespace mnp;

struct Common {
  std::string config;
  std::optional<int> workers;
  std::string out;
  std::string precession;
  std::string disc;
  std::string mesh_cache;
};

void add_common(CLI::App* app, Common& c, const std::string& default_out) {
  app->add_option("--config", c.config, "INI configuration file")->check(CLI::ExistingFile);
  app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "output directory")->default_str(default_out);
  app->add_option("--precession", c.precession, "precession terms")->check(CLI::IsMember({"on", "off"}));
  app->add_option("--disc", c.disc, "sh:N or fv:level[:beta]");
  app->add_option("--mesh-cache", c.mesh_cache, "icosphere cache directory");
  c.out = default_out;
}

ScenarioConfig load(const Common& c) {
  ScenarioConfig s = c.config.empty() ? parse_config("") : load_config(c.config);
  if (c.workers) s.workers = *c.workers;
  if (!c.mesh_cache.empty()) s.mesh_cache = c.mesh_cache;
  if (c.precession == "on") s.precession = true;
  if (c.precession == "off") s.precession = false;
  if (!c.disc.empty()) s.discretization = parse_discretization(c.disc);
  s.xspace.mesh_cache = s.dictionary.mesh_cache = s.mesh_cache;
  s.xspace.workers = s.dictionary.workers = s.workers;
  return s;
}

int run_simulate(const Common& c, std::optional<double> dump_time) {
  const ScenarioConfig s = load(c);
  if (dump_time) {
    const FieldSequence field = scenario_field(s);
    const OperatorDump d = dump_operator(scenario_model(s), field, scenario_options(s, field), *dump_time);
    std::filesystem::create_directories(c.out);
    std::ofstream f(std::filesystem::path(c.out) / "operator.csv");
    f << "row,col,re,im\n";
    char line[96];
    for (const auto& e : d.entries) {
      std::snprintf(line, sizeof line, "%ld,%ld,%.17g,%.17g\n", static_cast<long>(e.row()),
                    static_cast<long>(e.col()), e.value().real(), e.value().imag());
      f << line;
    }
    std::cout << "operator " << d.rows << "x" << d.rows << ", " << d.entries.size() << " entries\n";
    return 0;
  }
  const RunReport r = run_single(s, c.out);
  std::cout << to_string(r.status) << " in " << r.wall_seconds << " s, " << r.stats.accepted << " steps -> "
            << c.out << "\n";
  if (!r.message.empty()) std::cout << r.message << "\n";
  return r.status == RunStatus::ok ? 0 : 1;
}

int run_sweep(const Common& c, bool offsets) {
  const ScenarioConfig s = load(c);
  std::size_t failed = 0, total = 0;
  double seconds = 0.0;
  if (offsets) {
    const OffsetSweepResult r = run_offset_sweep(s, c.out);
    for (const auto& cell : r.cells) failed += cell.status != RunStatus::ok;
    total = r.cells.size();
    seconds = r.wall_seconds;
  } else {
    if (s.sweep.diameters.empty() || s.sweep.discretizations.empty()) {
      throw InvalidParameter("accuracy sweep needs sweep.diameters_nm and sweep.discretizations");
    }
    const AccuracySweepResult r = run_accuracy_sweep(s, c.out);
    for (const auto& cell : r.cells) failed += cell.status != RunStatus::ok;
    total = r.cells.size();
    seconds = r.wall_seconds;
  }
  std::cout << total << " cells, " << failed << " failed, " << seconds << " s -> " << c.out << "\n";
  return 0;
}

int run_dict_build(const Common& c) {
  const ScenarioConfig s = load(c);
  DictionaryConfig d = s.dictionary;
  if (!c.precession.empty()) d.precession = s.precession;
  if (!c.disc.empty()) d.discretization = s.discretization;
  const Dictionary dict = build_dictionary(s.dictionary_grid, d);
  const std::filesystem::path stem = std::filesystem::path(c.out) / "dictionary";
  std::filesystem::create_directories(c.out);
  save_dictionary(dict, stem);
  std::cout << dict.matrix.rows() << "x" << dict.matrix.cols() << ", " << dict.usable_columns().size()
            << " usable columns -> " << stem.string() << ".{bin,json}\n";
  return dict.usable_columns().size() == dict.columns.size() ? 0 : 1;
}

// one column per reference angle, one row per sample, optional header
std::vector<std::vector<double>> read_signal_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read signal file " + path.string());
  std::vector<std::vector<double>> cols;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) numeric = false;
      row.push_back(v);
    }
    if (!numeric) {
      if (cols.empty()) continue;  // header
      throw InvalidInput("non-numeric row in " + path.string());
    }
    if (cols.empty()) cols.resize(row.size());
    if (row.size() != cols.size()) throw InvalidInput("ragged row in " + path.string());
    for (std::size_t j = 0; j < row.size(); ++j) cols[j].push_back(row[j]);
  }
  return cols;
}

int run_dict_fit(const Common& c, const std::string& dict_stem, const std::string& signal, std::optional<double> beta,
                 double noise) {
  const Dictionary d = load_dictionary(dict_stem);
  const Eigen::VectorXd v = stack_signals(read_signal_csv(signal));
  if (v.size() != d.matrix.rows()) {
    throw InvalidInput("signal has " + std::to_string(v.size()) + " rows, dictionary expects " +
                       std::to_string(d.matrix.rows()));
  }
  FitOptions fo;
  fo.selection.noise_norm = noise;
  WeightFit fit;
  nlohmann::json j;
  if (beta) {
    fit = fit_weights(d, v, *beta, fo);
  } else {
    const AutoFit a = fit_weights_auto(d, v, fo);
    fit = a.fit;
    j["beta_path"] = {{"beta", a.betas}, {"residual", a.residuals}, {"support", a.support_sizes}};
    j["noise_norm"] = a.noise_norm;
  }
  std::filesystem::create_directories(c.out);
  const std::filesystem::path out(c.out);
  {
    std::ofstream f(out / "weights.csv");
    f << "column,diameter_nm,anisotropy,angle_offset_deg,weight\n";
    char line[128];
    for (const ColumnInfo& col : d.columns) {
      std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g\n", col.index, col.diameter * 1e9,
                    col.anisotropy, col.angle_offset * 180.0 / std::numbers::pi,
                    fit.weights(static_cast<Eigen::Index>(col.index)));
      f << line;
    }
  }
  const Marginals m = marginals(fit.weights, d.grid);
  j["beta"] = fit.beta;
  j["objective"] = fit.objective;
  j["residual_norm"] = fit.residual_norm;
  j["residual_per_angle"] = fit.residual_per_angle;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["diameter_histogram"] = m.diameter_histogram();
  j["anisotropy_histogram"] = m.anisotropy_histogram();
  write_json(out / "fit.json", j);
  std::cout << "beta " << fit.beta << ", residual " << fit.residual_norm << " -> " << c.out << "\n";
  return fit.converged ? 0 : 1;
}

int run_xspace(const Common& c, const std::string& mode, const std::vector<double>& diameters_nm) {
  ScenarioConfig s = load(c);
  XspaceConfig x = s.xspace;
  if (!mode.empty()) {
    const XspaceMode m = parse_xspace_mode(mode);
    if (m != x.trajectory.mode) {
      x = default_xspace_config(m);
      x.constants = s.constants;
      x.mesh_cache = s.mesh_cache;
      x.workers = s.workers;
    }
  }
  if (!c.disc.empty()) x.discretization = s.discretization;
  std::vector<double> ds = s.xspace_diameters;
  if (!diameters_nm.empty()) {
    ds.clear();
    for (double d : diameters_nm) ds.push_back(d * 1e-9);
  }
  const std::vector<KernelResult> ks = kernel_study(x, ds);
  const std::filesystem::path out(c.out);
  std::filesystem::create_directories(out);
  nlohmann::json summary = nlohmann::json::array();
  for (const KernelResult& k : ks) {
    char name[64];
    std::snprintf(name, sizeof name, "kernel_D%.0f.csv", k.hydro_diameter * 1e9);
    std::ofstream f(out / name);
    f << "x_mm,kernel,normalized\n";
    const std::vector<double> raw = k.estimate.centered_values();
    char line[96];
    for (std::size_t i = 0; i < k.positions.size(); ++i) {
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", k.positions[i] * 1e3, raw[i], k.normalized[i]);
      f << line;
    }
    summary.push_back({{"hydro_diameter_nm", k.hydro_diameter * 1e9},
                       {"core_diameter_nm", k.core_diameter * 1e9},
                       {"fwhm_mm", std::isfinite(k.fwhm) ? nlohmann::json(k.fwhm * 1e3) : nlohmann::json()},
                       {"peak_shift_mm", k.peak_shift * 1e3},
                       {"raw_peak", k.raw_peak},
                       {"zeroed_bins", k.estimate.zeroed_bins.size()},
                       {"wall_seconds", k.wall_seconds},
                       {"warnings", k.warnings}});
    std::printf("D_h %.0f nm: FWHM %.4f mm, peak shift %.4f mm\n", k.hydro_diameter * 1e9, k.fwhm * 1e3,
                k.peak_shift * 1e3);
  }
  write_json(out / "summary.json",
             {{"mode", to_string(x.trajectory.mode)}, {"discretization", to_string(xspace_discretization(x))},
              {"kernels", summary}});
  return 0;
}

int run_validate(const std::string& work_dir, const std::string& mesh_cache, const std::vector<int>& only,
                 const std::string& json_out) {
  acceptance::Options o;
  o.work_dir = work_dir;
  o.mesh_cache = mesh_cache;
  o.only = only;
  const auto results = acceptance::run_suite(o, std::cout);
  bool all = !results.empty();
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : results) {
    all = all && r.passed();
    j.push_back(acceptance::to_json(r));
  }
  const nlohmann::json doc = {{"passed", all}, {"criteria", j}};
  if (!json_out.empty()) write_json(json_out, doc);
  std::cout << (all ? "all criteria passed" : "some criteria failed") << "\n";
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fokker-Planck magnetic nanoparticle simulator"};
  app.require_subcommand(1);

  Common sim_opts, offs_opts, acc_opts, build_opts, fit_opts, xs_opts;
  std::optional<double> dump_time;
  auto* sim = app.add_subcommand("simulate", "single trajectory");
  add_common(sim, sim_opts, "runs/simulate");
  sim->add_option("--dump-operator", dump_time, "write M(t) at this time instead of integrating");

  auto* sweep = app.add_subcommand("sweep", "parameter sweeps");
  sweep->require_subcommand(1);
  auto* offs = sweep->add_subcommand("offsets", "precession study over FFP offsets");
  add_common(offs, offs_opts, "runs/offsets");
  auto* acc = sweep->add_subcommand("accuracy", "discretization error over (D, K)");
  add_common(acc, acc_opts, "runs/accuracy");

  auto* dict = app.add_subcommand("dict", "MPS dictionary");
  dict->require_subcommand(1);
  auto* build = dict->add_subcommand("build", "solve all dictionary columns");
  add_common(build, build_opts, "runs/dictionary");
  auto* fit = dict->add_subcommand("fit", "nonnegative lasso fit of a measured signal");
  add_common(fit, fit_opts, "runs/fit");
  std::string dict_stem, signal;
  std::optional<double> beta;
  double noise = 0.0;
  fit->add_option("--dictionary", dict_stem, "dictionary stem (without .bin/.json)")->required();
  fit->add_option("--signal", signal, "CSV, one column per reference angle")->required()->check(CLI::ExistingFile);
  fit->add_option("--beta", beta, "fixed penalty; default: discrepancy choice");
  fit->add_option("--noise", noise, "expected noise norm; 0 estimates it");

  auto* xs = app.add_subcommand("xspace", "x-space kernel study");
  add_common(xs, xs_opts, "runs/xspace");
  std::string mode;
  std::vector<double> diameters;
  xs->add_option("--mode", mode, "sin or pulsed");
  xs->add_option("--diameters", diameters, "hydrodynamic diameters in nm")->delimiter(',');

  auto* val = app.add_subcommand("validate", "acceptance suite");
  std::string work_dir = "acceptance_work", val_cache, json_out;
  std::vector<int> only;
  val->add_option("--work-dir", work_dir, "scratch and cache directory");
  val->add_option("--mesh-cache", val_cache, "icosphere cache directory");
  val->add_option("--only", only, "criterion ids")->delimiter(',');
  val->add_option("--json", json_out, "write the pass/fail report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return run_simulate(sim_opts, dump_time);
    if (*offs) return run_sweep(offs_opts, true);
    if (*acc) return run_sweep(acc_opts, false);
    if (*build) return run_dict_build(build_opts);
    if (*fit) return run_dict_fit(fit_opts, dict_stem, signal, beta, noise);
    if (*xs) return run_xspace(xs_opts, mode, diameters);
    if (*val) return run_validate(work_dir, val_cache, only, json_out);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
