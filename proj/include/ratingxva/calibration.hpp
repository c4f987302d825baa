#pragma once

// Historical calibration of (a, b, sigma) to a reconstructed one-year matrix
// and its reconstruction uncertainty, and risk-neutral calibration of the
// measure-change vector h to default probabilities. Both objectives draw their
// Brownian noise once per calibration (common random numbers), so the least
// squares problem sees a deterministic function of the parameters.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ratingxva/lsq.hpp"
#include "ratingxva/sde.hpp"

namespace ratingxva {

/// One-year (or horizon-T) default probabilities per starting rating; PD_K = 1.
struct PdTargets {
  Vector pd;

  PdTargets() = default;
  explicit PdTargets(Vector values) : pd(std::move(values)) {
    if (pd.size() < 2) throw DimensionError("PD targets need at least two ratings");
    for (Eigen::Index i = 0; i < pd.size(); ++i)
      if (!(pd[i] >= 0.0 && pd[i] <= 1.0)) throw DomainError("PD targets must lie in [0,1]");
    if (pd[pd.size() - 1] != 1.0) throw DomainError("PD of the default state must be 1");
  }

  int k() const { return static_cast<int>(pd.size()); }
};

struct HistCalibrationSpec {
  Matrix target_rec;  // mean target R^Rec at target_time
  Matrix target_adj;  // adjusted matrix R^A; the variance target is (R^Rec - R^A)^2
  double w1 = 1.0;
  double w2 = 1.0;
  std::size_t trajectories = 1000;
  std::uint64_t seed = 1;
  TimeGrid grid{1.0, 120};
  double target_time = 1.0;
  double lower = 0.0;
  double upper = 3.0;
  /// Starting point of the optimizer.
  double start_a = 1.5, start_b = 0.1, start_sigma = 0.05;
  LsqOptions lsq{};

  int k() const { return static_cast<int>(target_rec.rows()); }

  void validate() const {
    if (target_rec.rows() != target_rec.cols() || target_rec.rows() < 2) throw DimensionError("target must be square, K >= 2");
    if (target_adj.rows() != target_rec.rows() || target_adj.cols() != target_rec.cols())
      throw DimensionError("adjusted matrix and target differ in size");
    if (!(w1 > 0.0 && w2 > 0.0)) throw ValidationError("calibration weights must be positive");
    if (!(lower >= 0.0 && lower <= upper)) throw ValidationError("parameter bounds must satisfy 0 <= lower <= upper");
    if (trajectories < 2) throw ValidationError("calibration needs at least two trajectories");
    grid.index_of(target_time);
  }
};

/// Vectorizes row-major, matching the row-by-row reading of a rating matrix.
inline void vec_rowmajor(const Matrix& m, Vector& out, Eigen::Index offset) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[offset + i * m.cols() + j] = m(i, j);
}

/// f(p) = [w1 vec(mean - R^Rec); w2 vec(var - (R^Rec - R^A)^2)] with frozen noise.
class HistObjective {
 public:
  explicit HistObjective(HistCalibrationSpec spec)
      : spec_(std::move(spec)),
        noise_((spec_.validate(), spec_.seed), spec_.trajectories, static_cast<std::size_t>((spec_.k() - 1) * (spec_.k() - 1)),
               spec_.grid.steps()),
        variance_target_((spec_.target_rec - spec_.target_adj).array().square().matrix()),
        index_(spec_.grid.index_of(spec_.target_time)) {}

  const HistCalibrationSpec& spec() const noexcept { return spec_; }

  Vector operator()(const SdeParams& p) const {
    const auto samples = simulate_checkpoints(p, Vector::Zero(static_cast<Eigen::Index>(p.size())), spec_.grid, noise_, {index_});
    const Eigen::Index kk = spec_.k() * spec_.k();
    Vector out(2 * kk);
    vec_rowmajor(spec_.w1 * (samples[0].mean() - spec_.target_rec), out, 0);
    vec_rowmajor(spec_.w2 * (samples[0].variance() - variance_target_), out, kk);
    return out;
  }

 private:
  HistCalibrationSpec spec_;
  BrownianNoise noise_;
  Matrix variance_target_;
  int index_;
};

inline Vector hist_residual(const SdeParams& p, const HistCalibrationSpec& spec) { return HistObjective(spec)(p); }

struct HistCalibrationResult {
  SdeParams params;
  double sse = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  /// Set when the optimizer stopped without converging or a parameter saturated its upper bound.
  bool warning = false;
};

inline HistCalibrationResult calibrate_historical(const HistCalibrationSpec& spec) {
  const HistObjective objective(spec);
  const int k = spec.k();
  const Eigen::Index n = (k - 1) * (k - 1);
  Vector start(3 * n);
  start << Vector::Constant(n, spec.start_a), Vector::Constant(n, spec.start_b), Vector::Constant(n, spec.start_sigma);
  const Vector lower = Vector::Constant(3 * n, spec.lower);
  const Vector upper = Vector::Constant(3 * n, spec.upper);
  const auto res = levenberg_marquardt([&](const Vector& x) { return objective(SdeParams::unpack(k, x)); }, start, lower,
                                       upper, spec.lsq);
  return {SdeParams::unpack(k, res.x), res.sse, res.iterations, res.evaluations, res.converged,
          !res.converged || res.any_at_upper()};
}

struct RnCalibrationSpec {
  SdeParams params;
  MeasureKind kind = MeasureKind::exponential;
  PdTargets targets;
  TimeGrid grid{1.0, 120};
  double horizon = 1.0;  // calibration time T, on the grid
  std::size_t trajectories = 1000;
  std::uint64_t seed = 1;
  /// Bounds and start for the K-1 free entries of h.
  double lower = 1e-6;
  double upper = 1e3;
  double start = 1.0;
  LsqOptions lsq{};

  /// Checks what the objective needs (model, targets, grid).
  void validate_inputs() const {
    params.validate();
    if (targets.k() != params.k) throw DimensionError("PD targets and parameters disagree on K");
    if (trajectories < 1) throw ValidationError("calibration needs at least one trajectory");
    grid.index_of(horizon);
  }

  void validate() const {
    validate_inputs();
    if (kind == MeasureKind::historical) throw ValidationError("risk-neutral calibration needs kind jlt or exponential");
    if (!(lower <= upper)) throw ValidationError("h bounds must satisfy lower <= upper");
    if (kind == MeasureKind::exponential && lower <= 0.0)
      throw ValidationError("exponential measure change needs strictly positive lower bound on h");
  }
};

/// Mean default column at T minus PD targets, for a measure change m; frozen noise.
class RnObjective {
 public:
  explicit RnObjective(RnCalibrationSpec spec)
      : spec_(std::move(spec)),
        noise_((spec_.validate_inputs(), spec_.seed), spec_.trajectories, spec_.params.size(), spec_.grid.steps()),
        index_(spec_.grid.index_of(spec_.horizon)) {}

  Vector operator()(const MeasureChange& m) const {
    const int k = spec_.params.k;
    const auto samples = simulate_checkpoints(spec_.params, kappa_from_h(m, k), spec_.grid, noise_, {index_});
    return samples[0].mean().col(k - 1) - spec_.targets.pd;
  }

  const RnCalibrationSpec& spec() const noexcept { return spec_; }

 private:
  RnCalibrationSpec spec_;
  BrownianNoise noise_;
  int index_;
};

/// R_T^{h} e_K averaged over M trajectories, minus the targets. h has K entries, h_K = 1.
inline Vector rn_residual(const Vector& h, const SdeParams& p, MeasureKind kind, const PdTargets& targets,
                          const TimeGrid& grid, std::size_t trajectories, std::uint64_t seed) {
  const MeasureChange m{kind, h};
  m.validate(p.k);
  return RnObjective(RnCalibrationSpec{p, kind, targets, grid, grid.horizon(), trajectories, seed})(m);
}

struct RnCalibrationResult {
  MeasureChange measure;
  double sse = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool warning = false;
};

inline RnCalibrationResult calibrate_risk_neutral(const RnCalibrationSpec& spec) {
  spec.validate();
  const RnObjective objective(spec);
  const int k = spec.params.k;
  const Vector start = Vector::Constant(k - 1, spec.start);
  const auto res = levenberg_marquardt(
      [&](const Vector& free) { return objective(MeasureChange::from_free(spec.kind, free)); }, start,
      Vector::Constant(k - 1, spec.lower), Vector::Constant(k - 1, spec.upper), spec.lsq);
  return {MeasureChange::from_free(spec.kind, res.x), res.sse, res.iterations, res.evaluations, res.converged,
          !res.converged || res.any_at_upper()};
}

}  // namespace ratingxva
