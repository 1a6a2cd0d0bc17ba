#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mnp/field_model.hpp"
#include "mnp/simulation.hpp"

namespace mnp {

struct ParameterGrid {
  std::vector<double> diameters;        // m
  std::vector<double> anisotropies;     // J/m^3
  std::vector<double> angle_offsets;    // rad, symmetric about 0 or {0}
  std::vector<double> reference_angles; // rad

  std::size_t column_count() const { return diameters.size() * anisotropies.size() * angle_offsets.size(); }
  void validate() const;
};

// Column c <-> (iD, iK, iPhi) with iPhi fastest.
struct ColumnInfo {
  std::size_t index = 0;
  double diameter = 0.0;
  double anisotropy = 0.0;
  double angle_offset = 0.0;
  bool ok = true;
  std::string status;
  double wall_seconds = 0.0;
};

struct DictionaryConfig {
  PhysicalConstants constants;  // diameter and anisotropy are overwritten per column
  double amplitude = 0.02 / (4e-7 * std::numbers::pi);
  double frequency = 125e6 / 4800.0;
  std::size_t samples_per_period = 1000;
  double warmup_periods = 0.5;
  bool symmetrize = true;
  bool precession = true;
  Discretization discretization = FvDiscretization{3, 1.0};
  IntegratorConfig integrator = [] {
    IntegratorConfig c;
    c.rtol = 1e-4;
    c.atol = 1e-7;
    return c;
  }();
  std::filesystem::path mesh_cache;
  int workers = 1;
};

struct Dictionary {
  ParameterGrid grid;
  std::vector<double> times;     // one period, shared by every reference angle
  Eigen::MatrixXd matrix;        // rows = |times| * |reference_angles|
  std::vector<ColumnInfo> columns;
  std::string discretization;

  std::size_t rows_per_angle() const { return times.size(); }
  // Columns whose solves all succeeded and are not identically zero.
  std::vector<std::size_t> usable_columns() const;
};

// Easy axis (cos phi, sin phi, 0).
Vec3 easy_axis_at(double phi);

// Psi(t) = -mu0 d(mbar_x)/dt over the sampled period for one particle
// (k c0 V = 1).  Throws ConvergenceError when the solve fails.
std::vector<double> dictionary_signal(const DictionaryConfig& config, double diameter, double anisotropy, double phi,
                                      std::vector<double>* times = nullptr);

Dictionary build_dictionary(const ParameterGrid& grid, const DictionaryConfig& config);

// Stacks v^{(j)} in the dictionary's row order.
Eigen::VectorXd stack_signals(const std::vector<std::vector<double>>& signals);

// Binary matrix plus JSON manifest next to it (<stem>.bin, <stem>.json).
void save_dictionary(const Dictionary& d, const std::filesystem::path& stem);
Dictionary load_dictionary(const std::filesystem::path& stem);

struct LassoOptions {
  double tolerance = 1e-10;   // relative objective decrease
  std::size_t max_iterations = 200000;
  bool check_monotone = true; // throws if an iterate raises the objective
};

struct WeightFit {
  Eigen::VectorXd weights;
  double beta = 0.0;
  double objective = 0.0;
  double residual_norm = 0.0;                 // ||A w - v||
  std::vector<double> residual_per_angle;     // ||A^{(j)} w - v^{(j)}||
  std::size_t iterations = 0;
  bool converged = false;
};

// min ||A w - v||^2 + beta ||w||_1,  w >= 0  (monotone FISTA with
// backtracking).
WeightFit nn_lasso(const Eigen::MatrixXd& A, const Eigen::VectorXd& v, double beta, const LassoOptions& options = {},
                   std::size_t rows_per_angle = 0);

struct BetaSelection {
  std::vector<double> relative_grid;  // multiples of ||A^T v||_inf; empty: 1e-4..1e2
  double noise_norm = 0.0;            // expected ||noise||, 0: estimated
  double safety = 1.1;                // accept residual <= safety * noise_norm
};

struct AutoFit {
  WeightFit fit;
  std::vector<double> betas;
  std::vector<double> residuals;
  std::vector<std::size_t> support_sizes;
  double noise_norm = 0.0;
};

// Discrepancy pick: the largest beta whose residual stays below the noise
// level.  Columns are fitted in unit-norm scaling and mapped back; the
// chosen support is refitted without penalty to remove shrinkage.  Columns
// contributing less than the noise norm are then pruned and the rest refitted.
struct FitOptions {
  LassoOptions lasso;
  BetaSelection selection;
  bool normalize_columns = true;
  bool refit_support = true;
  double support_threshold = 0.0;  // drop weights below this fraction of max(w) before the refit
  bool prune_below_noise = true;   // auto fit only
};

WeightFit fit_weights(const Dictionary& d, const Eigen::VectorXd& v, double beta, const FitOptions& options = {});
AutoFit fit_weights_auto(const Dictionary& d, const Eigen::VectorXd& v, const FitOptions& options = {});

struct Marginals {
  std::vector<double> diameters, by_diameter;
  std::vector<double> anisotropies, by_anisotropy;
  double total = 0.0;
  // by_* normalized to unit sum (zeros when total = 0)
  std::vector<double> diameter_histogram() const;
  std::vector<double> anisotropy_histogram() const;
};

Marginals marginals(const Eigen::VectorXd& weights, const ParameterGrid& grid);

}  // namespace mnp
