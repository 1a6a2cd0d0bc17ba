#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>

#include "doctest.h"

#include "mnp/error.hpp"
#include "mnp/ident_dictionary.hpp"

using namespace mnp;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Smooth random dictionary with 50 columns and 3 blocks of 40 rows.
Dictionary synthetic_dictionary(unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dictionary d;
  d.grid.diameters = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  d.grid.anisotropies = {1, 2, 3, 4, 5};
  d.grid.angle_offsets = {0.0};
  d.grid.reference_angles = {0.0, 1.0, 2.0};
  for (int k = 0; k < 40; ++k) d.times.push_back(k);
  d.matrix.resize(120, 50);
  for (Eigen::Index c = 0; c < 50; ++c) {
    const double f = 1.0 + 3.0 * u(gen), p = 6.28 * u(gen), a = 0.5 + u(gen);
    for (Eigen::Index r = 0; r < 120; ++r) d.matrix(r, c) = a * std::sin(f * 0.1 * r + p) + 0.3 * u(gen);
    ColumnInfo info;
    info.index = static_cast<std::size_t>(c);
    info.diameter = d.grid.diameters[c / 5];
    info.anisotropy = d.grid.anisotropies[c % 5];
    info.status = "ok";
    d.columns.push_back(info);
  }
  return d;
}

DictionaryConfig fast_config() {
  DictionaryConfig c;
  c.samples_per_period = 200;
  c.discretization = ShDiscretization{10};
  return c;
}

}  // namespace

TEST_CASE("nonnegative soft threshold") {
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  LassoOptions o;
  o.tolerance = 1e-15;
  const WeightFit f = nn_lasso(A, Eigen::Vector2d(3.0, -1.0), 1.0, o);
  CHECK(f.converged);
  CHECK(f.weights(0) == doctest::Approx(2.5).epsilon(1e-8));
  CHECK(f.weights(1) == 0.0);
}

TEST_CASE("unpenalized fit is nonnegative least squares") {
  Eigen::MatrixXd A(4, 2);
  A << 1, 0, 1, 1, 0, 1, 2, 1;
  const Eigen::Vector2d w(0.7, 1.3);
  LassoOptions o;
  o.tolerance = 1e-15;
  const WeightFit f = nn_lasso(A, A * w, 0.0, o);
  CHECK((f.weights - w).norm() < 1e-6);
  // an infeasible least-squares direction is clipped
  const WeightFit g = nn_lasso(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1.0, -2.0), 0.0, o);
  CHECK(g.weights(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(g.weights(1) == 0.0);
}

TEST_CASE("unpenalized fits scale with the signal") {
  const Dictionary d = synthetic_dictionary(1);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(50);
  w(3) = 1.0, w(17) = 0.5, w(40) = 2.0;
  const Eigen::VectorXd v = d.matrix * w;
  LassoOptions o;
  o.tolerance = 1e-14;
  const WeightFit a = nn_lasso(d.matrix, v, 0.0, o);
  const WeightFit b = nn_lasso(d.matrix, 3.0 * v, 0.0, o);
  CHECK((b.weights - 3.0 * a.weights).norm() <= 1e-6 * b.weights.norm());
}

TEST_CASE("objective never increases") {
  const Dictionary d = synthetic_dictionary(2);
  const Eigen::VectorXd v = d.matrix.col(5) + 0.2 * d.matrix.col(9);
  LassoOptions o;
  o.check_monotone = true;
  CHECK_NOTHROW(nn_lasso(d.matrix, v, 0.1, o));
}

TEST_CASE("synthetic 3-sparse recovery") {
  const Dictionary d = synthetic_dictionary(3);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(50);
  w(4) = 1.0, w(21) = 0.6, w(38) = 1.4;
  const Eigen::VectorXd clean = d.matrix * w;
  std::mt19937 gen(8);
  std::normal_distribution<double> nd;
  Eigen::VectorXd noise(clean.size());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = nd(gen);
  noise *= 0.01 * clean.norm() / noise.norm();
  FitOptions fo;
  fo.selection.noise_norm = noise.norm();
  const AutoFit fit = fit_weights_auto(d, clean + noise, fo);
  std::set<Eigen::Index> support;
  for (Eigen::Index i = 0; i < 50; ++i) {
    if (fit.fit.weights(i) > 0.0) support.insert(i);
  }
  CHECK(support == std::set<Eigen::Index>{4, 21, 38});
  for (Eigen::Index i : {4, 21, 38}) CHECK(std::abs(fit.fit.weights(i) - w(i)) < 0.05 * w(i));
  CHECK(fit.fit.residual_per_angle.size() == 3);
  // every kept column explains more than the noise
  for (Eigen::Index i : support) CHECK(fit.fit.weights(i) * d.matrix.col(i).norm() >= fo.selection.noise_norm);
}

TEST_CASE("marginals") {
  ParameterGrid g;
  g.diameters = {20e-9, 30e-9};
  g.anisotropies = {500.0, 1000.0, 1500.0};
  g.angle_offsets = {-0.1, 0.0, 0.1};
  g.reference_angles = {0.0};
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.column_count()));
  w((1 * 3 + 2) * 3 + 1) = 2.0;
  Marginals m = marginals(w, g);
  CHECK(m.total == 2.0);
  CHECK(m.by_diameter == std::vector<double>{0.0, 2.0});
  CHECK(m.by_anisotropy == std::vector<double>{0.0, 0.0, 2.0});
  w((0 * 3 + 0) * 3 + 0) = 1.0;
  m = marginals(w, g);
  CHECK(m.diameter_histogram()[0] == doctest::Approx(1.0 / 3.0));
  CHECK(m.anisotropy_histogram()[0] == doctest::Approx(1.0 / 3.0));
  CHECK(m.anisotropy_histogram()[2] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("grid validation") {
  ParameterGrid g;
  g.diameters = {20e-9};
  g.anisotropies = {500.0};
  g.angle_offsets = {-0.1, 0.2};
  g.reference_angles = {0.0};
  CHECK_THROWS_AS(g.validate(), InvalidParameter);
  g.angle_offsets = {0.0};
  CHECK_NOTHROW(g.validate());
  g.diameters = {30e-9, 20e-9};
  CHECK_THROWS_AS(g.validate(), InvalidParameter);
}

TEST_CASE("small physical dictionary") {
  ParameterGrid g;
  g.diameters = {20e-9, 40e-9};
  g.anisotropies = {1000.0};
  g.angle_offsets = {0.0};
  g.reference_angles = {0.0, 45.0 * kDeg};
  DictionaryConfig c = fast_config();
  const Dictionary d = build_dictionary(g, c);
  REQUIRE(d.usable_columns().size() == 2);
  CHECK(d.matrix.rows() == 400);
  CHECK(d.times.size() == 200);

  // D = 20 nm and 40 nm columns are not proportional
  const Eigen::VectorXd a = d.matrix.col(0).normalized(), b = d.matrix.col(1).normalized();
  CHECK(std::abs(a.dot(b)) < 0.999);

  // the first angle block is the aligned-axis signal
  std::vector<double> t;
  const auto psi = dictionary_signal(c, 20e-9, 1000.0, 0.0, &t);
  for (std::size_t k = 0; k < psi.size(); ++k) CHECK(d.matrix(static_cast<Eigen::Index>(k), 0) == psi[k]);
  REQUIRE(t.size() == d.times.size());
  for (std::size_t k = 0; k < t.size(); ++k) CHECK(t[k] == doctest::Approx(d.times[k]).epsilon(1e-12));

  // zero offset: symmetrized and plain columns agree
  c.symmetrize = false;
  const Dictionary plain = build_dictionary(g, c);
  CHECK((plain.matrix - d.matrix).norm() == 0.0);

  const auto dir = std::filesystem::temp_directory_path() / "mnp_test_dictionary";
  std::filesystem::remove_all(dir);
  save_dictionary(d, dir / "d");
  const Dictionary back = load_dictionary(dir / "d");
  CHECK(back.matrix == d.matrix);
  CHECK(back.grid.diameters == d.grid.diameters);
  CHECK(back.discretization == d.discretization);
  std::filesystem::remove_all(dir);
}

TEST_CASE("symmetrized columns average the two offsets") {
  ParameterGrid g;
  g.diameters = {25e-9};
  g.anisotropies = {2000.0};
  g.angle_offsets = {-20.0 * kDeg, 0.0, 20.0 * kDeg};
  g.reference_angles = {30.0 * kDeg};
  const DictionaryConfig c = fast_config();
  const Dictionary d = build_dictionary(g, c);
  const auto plus = dictionary_signal(c, 25e-9, 2000.0, 30.0 * kDeg + 20.0 * kDeg);
  const auto minus = dictionary_signal(c, 25e-9, 2000.0, 30.0 * kDeg - 20.0 * kDeg);
  for (std::size_t k = 0; k < plus.size(); ++k) {
    CHECK(d.matrix(static_cast<Eigen::Index>(k), 2) == 0.5 * (plus[k] + minus[k]));
    CHECK(d.matrix(static_cast<Eigen::Index>(k), 0) == d.matrix(static_cast<Eigen::Index>(k), 2));
  }
}

TEST_CASE("fit input checks") {
  const Dictionary d = synthetic_dictionary(4);
  CHECK_THROWS_AS(fit_weights(d, Eigen::VectorXd::Zero(3), 0.1), InvalidInput);
  CHECK_THROWS_AS(load_dictionary(std::filesystem::temp_directory_path() / "mnp_missing_dictionary"), InvalidInput);
}
