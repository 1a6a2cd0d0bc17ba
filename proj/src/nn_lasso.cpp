#include <cmath>
#include <limits>

#include "mnp/error.hpp"
#include "mnp/ident_dictionary.hpp"

namespace mnp {

namespace {

// f(w) = w'Gw - 2 w'c + vv  (= ||Aw - v||^2)
double smooth_part(const Eigen::MatrixXd& G, const Eigen::VectorXd& c, double vv, const Eigen::VectorXd& w) {
  return std::max(0.0, w.dot(G * w) - 2.0 * w.dot(c) + vv);
}

Eigen::VectorXd prox(const Eigen::VectorXd& y, double shift) { return (y.array() - shift).max(0.0).matrix(); }

}  // namespace

WeightFit nn_lasso(const Eigen::MatrixXd& A, const Eigen::VectorXd& v, double beta, const LassoOptions& options,
                   std::size_t rows_per_angle) {
  if (!(beta >= 0.0)) throw InvalidParameter("regularization beta must be nonnegative");
  if (A.rows() != v.size()) throw InvalidInput("dictionary rows do not match the signal length");
  if (rows_per_angle > 0 && static_cast<std::size_t>(A.rows()) % rows_per_angle != 0) {
    throw InvalidInput("signal length is not a multiple of the samples per angle");
  }
  const Eigen::Index n = A.cols();
  const Eigen::MatrixXd G = A.transpose() * A;
  const Eigen::VectorXd c = A.transpose() * v;
  const double vv = v.squaredNorm();
  auto objective = [&](const Eigen::VectorXd& w) { return smooth_part(G, c, vv, w) + beta * w.sum(); };

  WeightFit fit;
  fit.beta = beta;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n), y = w, w_prev = w;
  double F = objective(w);
  double step = 1.0;
  {
    // start from the inverse of a cheap Lipschitz bound
    const double l = 2.0 * G.diagonal().sum();
    step = l > 0.0 ? 1.0 / l : 1.0;
  }
  double theta = 1.0;
  int quiet = 0;
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    const Eigen::VectorXd grad = 2.0 * (G * y - c);
    const double fy = smooth_part(G, c, vv, y);
    Eigen::VectorXd z;
    // backtracking: accept when the quadratic model majorizes f
    for (int bt = 0; bt < 60; ++bt) {
      z = prox(y - step * grad, step * beta);
      const Eigen::VectorXd d = z - y;
      if (smooth_part(G, c, vv, z) <= fy + grad.dot(d) + d.squaredNorm() / (2.0 * step) * (1.0 + 1e-12) + 1e-300) break;
      step *= 0.5;
    }
    const double Fz = objective(z);
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    w_prev = w;
    const double F_prev = F;
    // monotone variant: keep the better of z and the previous iterate
    if (Fz <= F) {
      w = z;
      F = Fz;
    }
    y = w + (theta / theta_next) * (z - w) + ((theta - 1.0) / theta_next) * (w - w_prev);
    theta = theta_next;
    if (options.check_monotone && F > F_prev * (1.0 + 1e-14) + 1e-300) {
      throw ConvergenceError("nonnegative LASSO objective increased");
    }
    fit.iterations = it;
    const double rel = (F_prev - F) / std::max(F, std::numeric_limits<double>::min());
    if (rel < options.tolerance) {
      // restart the momentum once before declaring convergence
      if (++quiet >= 3) {
        const Eigen::VectorXd g = 2.0 * (G * w - c);
        const Eigen::VectorXd r = w - prox(w - step * g, step * beta);
        if (r.norm() <= std::sqrt(options.tolerance) * w.norm() || r.norm() == 0.0) {
          fit.converged = true;
          break;
        }
        y = w;
        theta = 1.0;
        quiet = 0;
      }
    } else {
      quiet = 0;
    }
  }
  fit.weights = w;
  fit.objective = F;
  const Eigen::VectorXd res = A * w - v;
  fit.residual_norm = res.norm();
  if (rows_per_angle > 0) {
    for (Eigen::Index r0 = 0; r0 < res.size(); r0 += static_cast<Eigen::Index>(rows_per_angle)) {
      fit.residual_per_angle.push_back(res.segment(r0, static_cast<Eigen::Index>(rows_per_angle)).norm());
    }
  } else {
    fit.residual_per_angle.push_back(fit.residual_norm);
  }
  return fit;
}

}  // namespace mnp
