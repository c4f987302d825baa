#pragma once

// Bound-constrained Levenberg-Marquardt with a forward-difference Jacobian.
// Coordinates sitting on a bound whose gradient points outward are frozen for
// the step (a simple active-set projection); everything else takes the damped
// Gauss-Newton step, damped along the running maximum of diag(J^T J).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "ratingxva/lie.hpp"

namespace ratingxva {

struct LsqOptions {
  int max_iterations = 100;
  double initial_damping = 1e-3;
  double fd_relative_step = 1e-6;
  /// Floor for |x| when sizing the difference step, so zero-valued parameters still move.
  double fd_step_floor = 1e-2;
  /// Converged when an accepted step lowers the SSE by less than this fraction.
  double relative_tolerance = 1e-6;
  double max_damping = 1e12;
};

struct LsqResult {
  Vector x;
  Vector residual;
  double sse = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<bool> at_lower, at_upper;

  bool any_at_upper() const { return std::find(at_upper.begin(), at_upper.end(), true) != at_upper.end(); }
};

using ResidualFunction = std::function<Vector(const Vector&)>;

inline LsqResult levenberg_marquardt(const ResidualFunction& f, Vector x0, const Vector& lower, const Vector& upper,
                                     const LsqOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) throw DimensionError("bounds do not match parameter count");
  for (Eigen::Index j = 0; j < n; ++j)
    if (!(lower[j] <= upper[j])) throw DomainError("lower bound exceeds upper bound");

  LsqResult res;
  res.x = x0.cwiseMax(lower).cwiseMin(upper);
  res.residual = f(res.x);
  ++res.evaluations;
  res.sse = res.residual.squaredNorm();
  if (!std::isfinite(res.sse)) throw NumericalError("objective is not finite at the starting point");

  double damping = opt.initial_damping;
  Matrix jac(res.residual.size(), n);
  Vector col_scale = Vector::Zero(n);  // running max of diag(J^T J)
  for (res.iterations = 0; res.iterations < opt.max_iterations;) {
    ++res.iterations;
    for (Eigen::Index j = 0; j < n; ++j) {
      double h = opt.fd_relative_step * std::max(std::abs(res.x[j]), opt.fd_step_floor);
      if (res.x[j] + h > upper[j]) h = -h;
      Vector xp = res.x;
      xp[j] += h;
      jac.col(j) = (f(xp) - res.residual) / h;
      ++res.evaluations;
    }
    const Vector grad = jac.transpose() * res.residual;
    const Matrix normal = jac.transpose() * jac;
    col_scale = col_scale.cwiseMax(normal.diagonal());

    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool pinned_low = res.x[j] <= lower[j] && grad[j] > 0.0;
      const bool pinned_high = res.x[j] >= upper[j] && grad[j] < 0.0;
      if (!pinned_low && !pinned_high) free.push_back(j);
    }
    if (free.empty()) {
      res.converged = true;
      break;
    }

    const auto m = static_cast<Eigen::Index>(free.size());
    Matrix a(m, m);
    Vector g(m);
    double diag_max = 0.0;
    for (Eigen::Index p = 0; p < m; ++p) {
      g[p] = grad[free[static_cast<std::size_t>(p)]];
      for (Eigen::Index q = 0; q < m; ++q) a(p, q) = normal(free[static_cast<std::size_t>(p)], free[static_cast<std::size_t>(q)]);
      diag_max = std::max(diag_max, a(p, p));
    }
    if (diag_max == 0.0) {
      res.converged = true;
      break;
    }

    bool accepted = false;
    bool stalled = false;
    while (!accepted) {
      Matrix damped = a;
      for (Eigen::Index p = 0; p < m; ++p) damped(p, p) += damping * std::max(col_scale[free[static_cast<std::size_t>(p)]], 1e-12 * diag_max);
      const Vector step = damped.ldlt().solve(-g);
      Vector trial = res.x;
      for (Eigen::Index p = 0; p < m; ++p) trial[free[static_cast<std::size_t>(p)]] += step[p];
      trial = trial.cwiseMax(lower).cwiseMin(upper);
      const Vector r_trial = f(trial);
      ++res.evaluations;
      const double sse_trial = r_trial.squaredNorm();
      if (std::isfinite(sse_trial) && sse_trial < res.sse) {
        const double gain = (res.sse - sse_trial) / std::max(res.sse, std::numeric_limits<double>::min());
        res.x = trial;
        res.residual = r_trial;
        res.sse = sse_trial;
        damping = std::max(damping / 10.0, 1e-15);
        accepted = true;
        if (gain < opt.relative_tolerance) stalled = true;
      } else {
        damping *= 10.0;
        if (damping > opt.max_damping) {
          stalled = true;
          break;
        }
      }
    }
    if (stalled || res.sse == 0.0) {
      res.converged = true;
      break;
    }
  }

  res.at_lower.resize(static_cast<std::size_t>(n));
  res.at_upper.resize(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    res.at_lower[static_cast<std::size_t>(j)] = res.x[j] <= lower[j];
    res.at_upper[static_cast<std::size_t>(j)] = res.x[j] >= upper[j];
  }
  return res;
}

}  // namespace ratingxva
