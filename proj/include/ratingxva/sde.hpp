#pragma once

// Coefficient SDEs in g>=0,
//
//   dA^i = |Y^i|^{a_i} dt,   dY^i = (b_i + sigma_i kappa_i) dt + sigma_i dW^i,
//
// integrated with the geometric Euler-Maruyama scheme R_{k+1} = R_k exp(dA_k),
// where dA_k is the one-step increment over [t_k, t_{k+1}] evaluated at the left
// end point. kappa = 0 is the historical measure; a constant kappa realizes the
// Girsanov drift shift of the risk-neutral measure.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ratingxva/lie.hpp"
#include "ratingxva/parallel.hpp"
#include "ratingxva/rng.hpp"

namespace ratingxva {

/// Per-coordinate (a_i, b_i, sigma_i) and initial values y0_i, indexed through
/// BasisIndexMap.
struct SdeParams {
  int k = 0;
  Vector a, b, sigma, y0;

  SdeParams() = default;
  SdeParams(int k_, Vector a_, Vector b_, Vector sigma_, Vector y0_ = Vector())
      : k(k_), a(std::move(a_)), b(std::move(b_)), sigma(std::move(sigma_)), y0(std::move(y0_)) {
    if (y0.size() == 0) y0 = Vector::Zero(a.size());
    validate();
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(a.size()); }

  void validate() const {
    if (k < 2) throw DimensionError("SdeParams: rating count must be at least 2");
    const auto n = static_cast<Eigen::Index>((k - 1) * (k - 1));
    if (a.size() != n || b.size() != n || sigma.size() != n || y0.size() != n)
      throw DimensionError("SdeParams: every parameter array needs " + std::to_string(n) + " entries");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(a[i] >= 0.0) || !(b[i] >= 0.0) || !(sigma[i] >= 0.0) || !std::isfinite(a[i] + b[i] + sigma[i]))
        throw DomainError("SdeParams: a, b, sigma must be finite and nonnegative (coordinate " + std::to_string(i + 1) + ")");
      if (!std::isfinite(y0[i])) throw DomainError("SdeParams: y0 must be finite");
    }
  }

  /// Stacks [a; b; sigma] into one vector of length 3 (K-1)^2.
  Vector packed() const {
    Vector p(3 * a.size());
    p << a, b, sigma;
    return p;
  }

  static SdeParams unpack(int k, const Vector& p, const Vector& y0 = Vector()) {
    const Eigen::Index n = (k - 1) * (k - 1);
    if (p.size() != 3 * n) throw DimensionError("packed SdeParams has wrong length");
    return SdeParams(k, p.segment(0, n), p.segment(n, n), p.segment(2 * n, n), y0);
  }
};

enum class MeasureKind { historical, jlt, exponential };

inline std::string_view to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::historical: return "historical";
    case MeasureKind::jlt: return "jlt";
    case MeasureKind::exponential: return "exponential";
  }
  return "historical";
}

inline MeasureKind parse_measure_kind(std::string_view s) {
  if (s == "historical" || s == "P") return MeasureKind::historical;
  if (s == "jlt" || s == "JLT") return MeasureKind::jlt;
  if (s == "exponential" || s == "exp") return MeasureKind::exponential;
  throw ValidationError("unknown measure kind '" + std::string(s) + "' (historical | jlt | exponential)");
}

/// Measure change parametrized by h in R^K with h_K = 1.
struct MeasureChange {
  MeasureKind kind = MeasureKind::historical;
  Vector h;

  static MeasureChange historical(int k) { return {MeasureKind::historical, Vector::Ones(k)}; }

  /// Appends h_K = 1 to the K-1 free parameters.
  static MeasureChange from_free(MeasureKind kind, const Vector& free) {
    Vector h(free.size() + 1);
    h << free, 1.0;
    return {kind, h};
  }

  void validate(int k) const {
    if (h.size() != k) throw DimensionError("measure change needs h of length K=" + std::to_string(k));
    if (h[k - 1] != 1.0) throw DomainError("measure change requires h_K = 1");
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      if (!std::isfinite(h[i])) throw DomainError("measure change h must be finite");
      if (kind == MeasureKind::exponential && h[i] == 0.0)
        throw DomainError("exponential measure change requires every h_i != 0");
    }
  }
};

/// Girsanov kernel per basis coordinate (i, j): h_i (JLT), h_i / h_j
/// (exponential), 0 (historical).
inline Vector kappa_from_h(const MeasureChange& m, int k) {
  const BasisIndexMap basis(k);
  Vector kappa = Vector::Zero(static_cast<Eigen::Index>(basis.size()));
  if (m.kind == MeasureKind::historical) return kappa;
  m.validate(k);
  for (std::size_t idx = 0; idx < basis.size(); ++idx) {
    const auto [i, j] = basis.pair(idx);
    kappa[static_cast<Eigen::Index>(idx)] = m.kind == MeasureKind::jlt ? m.h[i] : m.h[i] / m.h[j];
  }
  return kappa;
}

/// Homogeneous mesh of [0, T] with N steps.
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    if (steps < 1) throw DomainError("time grid needs at least one step");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("time grid horizon must be positive");
  }

  /// N = round(T * steps_per_year).
  static TimeGrid per_year(double horizon, int steps_per_year) {
    return TimeGrid(horizon, static_cast<int>(std::lround(horizon * steps_per_year)));
  }

  double horizon() const noexcept { return horizon_; }
  int steps() const noexcept { return steps_; }
  double dt() const noexcept { return horizon_ / steps_; }
  double time(int index) const noexcept { return horizon_ * index / steps_; }

  /// Grid index of t; throws DomainError when t is not a grid point (1e-9 relative slack).
  int index_of(double t) const {
    const double pos = t / dt();
    const long idx = std::lround(pos);
    if (idx < 0 || idx > steps_ || std::abs(pos - static_cast<double>(idx)) > 1e-9 * std::max(1.0, pos))
      throw DomainError("time " + std::to_string(t) + " is not on the grid (dt = " + std::to_string(dt()) + ")");
    return static_cast<int>(idx);
  }

  bool operator==(const TimeGrid& o) const noexcept { return horizon_ == o.horizon_ && steps_ == o.steps_; }

 private:
  double horizon_;
  int steps_;
};

/// Frozen standard normals z[trajectory][coordinate][step], one counter-based
/// stream per (seed, trajectory, coordinate). Reusing one instance across
/// objective evaluations gives common random numbers.
class BrownianNoise {
 public:
  BrownianNoise(std::uint64_t seed, std::size_t trajectories, std::size_t coords, int steps)
      : seed_(seed), m_(trajectories), n_(coords), steps_(static_cast<std::size_t>(steps)), z_(m_ * n_ * steps_) {
    parallel_for(m_, [&](std::size_t w) {
      for (std::size_t i = 0; i < n_; ++i) {
        StreamRng rng(seed_, {stream_label::kMatrixSde, w, i});
        double* row = z_.data() + (w * n_ + i) * steps_;
        for (std::size_t s = 0; s < steps_; ++s) row[s] = rng.normal();
      }
    });
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t trajectories() const noexcept { return m_; }
  std::size_t coords() const noexcept { return n_; }
  int steps() const noexcept { return static_cast<int>(steps_); }

  std::span<const double> row(std::size_t trajectory, std::size_t coord) const {
    return {z_.data() + (trajectory * n_ + coord) * steps_, steps_};
  }

 private:
  std::uint64_t seed_;
  std::size_t m_, n_, steps_;
  std::vector<double> z_;
};

namespace detail {

struct StepWorkspace {
  Matrix generator, step, product, r;
  ExpWorkspace exp;
  Vector y, increment;
};

// Integrates one trajectory. After each step, sink(step_index + 1, R, increments, Y, ws)
// is called with the state at the right end point of the step.
template <class Sink>
void integrate_trajectory(const SdeParams& p, const Vector& drift, const TimeGrid& grid, const BrownianNoise& noise,
                          std::size_t trajectory, StepWorkspace& ws, Sink&& sink) {
  const int k = p.k;
  const std::size_t n = p.size();
  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  ws.r.setIdentity(k, k);
  ws.y = p.y0;
  ws.increment.resize(static_cast<Eigen::Index>(n));
  std::vector<std::span<const double>> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = noise.row(trajectory, i);

  for (int s = 0; s < grid.steps(); ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      ws.increment[ii] = std::pow(std::abs(ws.y[ii]), p.a[ii]) * dt;
      ws.y[ii] += drift[ii] * dt + p.sigma[ii] * sqrt_dt * z[i][static_cast<std::size_t>(s)];
    }
    assemble_generator(k, std::span<const double>(ws.increment.data(), n), ws.generator);
    expm_metzler_into(ws.generator, ws.step, ws.exp);
    ws.product.noalias() = ws.r * ws.step;
    ws.r.swap(ws.product);
    sink(s + 1, ws.r, ws.increment, ws.y);
  }
}

inline Vector shifted_drift(const SdeParams& p, const Vector& kappa) {
  if (kappa.size() != static_cast<Eigen::Index>(p.size())) throw DimensionError("kappa length must be (K-1)^2");
  Vector drift(p.b.size());
  for (Eigen::Index i = 0; i < drift.size(); ++i) drift[i] = p.b[i] + p.sigma[i] * kappa[i];
  return drift;
}

}  // namespace detail

/// M sampled K x K matrices (one per trajectory) at a fixed time.
class MatrixSample {
 public:
  MatrixSample(int k, std::size_t count) : k_(k), count_(count), data_(count * static_cast<std::size_t>(k * k)) {}

  int k() const noexcept { return k_; }
  std::size_t size() const noexcept { return count_; }

  Eigen::Map<Matrix> at(std::size_t i) { return {data_.data() + i * stride(), k_, k_}; }
  Eigen::Map<const Matrix> at(std::size_t i) const { return {data_.data() + i * stride(), k_, k_}; }

  Matrix mean() const {
    Matrix acc = Matrix::Zero(k_, k_);
    for (std::size_t i = 0; i < count_; ++i) acc += at(i);
    return acc / static_cast<double>(count_);
  }

  /// Unbiased elementwise variance (divisor M - 1).
  Matrix variance() const {
    if (count_ < 2) throw DomainError("variance needs at least two trajectories");
    const Matrix mu = mean();
    Matrix acc = Matrix::Zero(k_, k_);
    for (std::size_t i = 0; i < count_; ++i) acc += (at(i) - mu).array().square().matrix();
    return acc / static_cast<double>(count_ - 1);
  }

 private:
  std::size_t stride() const noexcept { return static_cast<std::size_t>(k_ * k_); }
  int k_;
  std::size_t count_;
  std::vector<double> data_;
};

/// Simulated R-paths with the per-step A-increments, Y-paths and Brownian
/// increments that produced them. Indexing: trajectory w, grid point s in [0, N].
class MatrixPathBundle {
 public:
  MatrixPathBundle(SdeParams params, MeasureChange measure, TimeGrid grid, std::size_t trajectories, std::uint64_t seed)
      : params_(std::move(params)),
        measure_(std::move(measure)),
        grid_(grid),
        m_(trajectories),
        seed_(seed),
        n_(params_.size()),
        r_(m_ * points() * kk()),
        inc_(m_ * steps() * n_),
        y_(m_ * points() * n_),
        dw_(m_ * steps() * n_) {}

  int k() const noexcept { return params_.k; }
  std::size_t trajectories() const noexcept { return m_; }
  std::size_t coords() const noexcept { return n_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  const SdeParams& params() const noexcept { return params_; }
  const MeasureChange& measure() const noexcept { return measure_; }
  std::uint64_t seed() const noexcept { return seed_; }

  Eigen::Map<const Matrix> r(std::size_t w, int s) const { return {r_.data() + (w * points() + idx(s)) * kk(), k(), k()}; }
  Eigen::Map<Matrix> r(std::size_t w, int s) { return {r_.data() + (w * points() + idx(s)) * kk(), k(), k()}; }

  /// A-increment coefficients over [t_s, t_{s+1}], s in [0, N).
  std::span<const double> increments(std::size_t w, int s) const { return {inc_.data() + (w * steps() + idx(s)) * n_, n_}; }
  std::span<double> increments(std::size_t w, int s) { return {inc_.data() + (w * steps() + idx(s)) * n_, n_}; }

  std::span<const double> y(std::size_t w, int s) const { return {y_.data() + (w * points() + idx(s)) * n_, n_}; }
  std::span<double> y(std::size_t w, int s) { return {y_.data() + (w * points() + idx(s)) * n_, n_}; }

  /// Brownian increments W_{t_{s+1}} - W_{t_s} per coordinate.
  std::span<const double> brownian(std::size_t w, int s) const { return {dw_.data() + (w * steps() + idx(s)) * n_, n_}; }
  std::span<double> brownian(std::size_t w, int s) { return {dw_.data() + (w * steps() + idx(s)) * n_, n_}; }

  /// All trajectories at grid time t (must be a grid point).
  MatrixSample at_time(double t) const { return at_index(grid_.index_of(t)); }

  MatrixSample at_index(int s) const {
    MatrixSample out(k(), m_);
    for (std::size_t w = 0; w < m_; ++w) out.at(w) = r(w, s);
    return out;
  }

 private:
  std::size_t points() const noexcept { return static_cast<std::size_t>(grid_.steps()) + 1; }
  std::size_t steps() const noexcept { return static_cast<std::size_t>(grid_.steps()); }
  std::size_t kk() const noexcept { return static_cast<std::size_t>(k() * k()); }
  static std::size_t idx(int s) noexcept { return static_cast<std::size_t>(s); }

  SdeParams params_;
  MeasureChange measure_;
  TimeGrid grid_;
  std::size_t m_;
  std::uint64_t seed_;
  std::size_t n_;
  std::vector<double> r_, inc_, y_, dw_;
};

/// Full path simulation under the measure m. Results depend only on
/// (p, m, grid, M, seed), never on the thread count.
inline MatrixPathBundle simulate_paths(const SdeParams& p, const MeasureChange& m, const TimeGrid& grid,
                                       std::size_t trajectories, std::uint64_t seed) {
  p.validate();
  if (trajectories < 1) throw DomainError("simulate_paths needs at least one trajectory");
  const Vector drift = detail::shifted_drift(p, kappa_from_h(m, p.k));
  const BrownianNoise noise(seed, trajectories, p.size(), grid.steps());
  MatrixPathBundle bundle(p, m, grid, trajectories, seed);
  const double sqrt_dt = std::sqrt(grid.dt());
  parallel_for(trajectories, [&](std::size_t w) {
    detail::StepWorkspace ws;
    bundle.r(w, 0) = Matrix::Identity(p.k, p.k);
    for (std::size_t i = 0; i < p.size(); ++i) bundle.y(w, 0)[i] = p.y0[static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto z = noise.row(w, i);
      for (int s = 0; s < grid.steps(); ++s) bundle.brownian(w, s)[i] = sqrt_dt * z[static_cast<std::size_t>(s)];
    }
    detail::integrate_trajectory(p, drift, grid, noise, w, ws, [&](int s, const Matrix& r, const Vector& inc, const Vector& y) {
      bundle.r(w, s) = r;
      auto dst_inc = bundle.increments(w, s - 1);
      auto dst_y = bundle.y(w, s);
      for (std::size_t i = 0; i < dst_inc.size(); ++i) {
        dst_inc[i] = inc[static_cast<Eigen::Index>(i)];
        dst_y[i] = y[static_cast<Eigen::Index>(i)];
      }
    });
  });
  return bundle;
}

/// Matrices at the requested grid indices only, from pre-drawn noise. This is
/// the calibration fast path: same numbers as simulate_paths for the same seed.
inline std::vector<MatrixSample> simulate_checkpoints(const SdeParams& p, const Vector& kappa, const TimeGrid& grid,
                                                      const BrownianNoise& noise, const std::vector<int>& indices) {
  p.validate();
  if (noise.coords() != p.size() || noise.steps() != grid.steps()) throw DimensionError("noise does not match parameters/grid");
  const Vector drift = detail::shifted_drift(p, kappa);
  std::vector<MatrixSample> out;
  for (std::size_t c = 0; c < indices.size(); ++c) out.emplace_back(p.k, noise.trajectories());
  parallel_for(noise.trajectories(), [&](std::size_t w) {
    detail::StepWorkspace ws;
    for (std::size_t c = 0; c < indices.size(); ++c)
      if (indices[c] == 0) out[c].at(w) = Matrix::Identity(p.k, p.k);
    detail::integrate_trajectory(p, drift, grid, noise, w, ws, [&](int s, const Matrix& r, const Vector&, const Vector&) {
      for (std::size_t c = 0; c < indices.size(); ++c)
        if (indices[c] == s) out[c].at(w) = r;
    });
  });
  return out;
}

/// Elementwise sample mean across trajectories at grid time t.
inline Matrix mean_matrix(const MatrixPathBundle& bundle, double t) { return bundle.at_time(t).mean(); }

/// Elementwise unbiased sample variance at grid time t; rejects M = 1.
inline Matrix var_matrix(const MatrixPathBundle& bundle, double t) { return bundle.at_time(t).variance(); }

/// L_T = exp(kappa . W_T - |kappa|^2 T / 2) for constant kappa, from Brownian
/// increments laid out as (coords x steps).
inline double girsanov_density(const Vector& kappa, const Matrix& increments, const TimeGrid& grid) {
  if (increments.rows() != kappa.size() || increments.cols() != grid.steps())
    throw DimensionError("Brownian increments do not match kappa/grid");
  const Vector w_t = increments.rowwise().sum();
  return std::exp(kappa.dot(w_t) - 0.5 * kappa.squaredNorm() * grid.horizon());
}

/// Density for trajectory w of a bundle.
inline double girsanov_density(const Vector& kappa, const MatrixPathBundle& bundle, std::size_t w) {
  Matrix inc(static_cast<Eigen::Index>(bundle.coords()), bundle.grid().steps());
  for (int s = 0; s < bundle.grid().steps(); ++s) {
    const auto dw = bundle.brownian(w, s);
    for (std::size_t i = 0; i < dw.size(); ++i) inc(static_cast<Eigen::Index>(i), s) = dw[i];
  }
  return girsanov_density(kappa, inc, bundle.grid());
}

}  // namespace ratingxva
