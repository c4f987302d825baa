#pragma once

// Repair of cohort-method rating matrices whose rows lose mass to withdrawals,
// and the distance / adjusted-matrix construction that turns the size of the
// repair into a variance target for calibration.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ratingxva/lie.hpp"

namespace ratingxva {

/// Row-substochastic rating matrix: entries in [0, 1], row sums at most 1
/// (1e-9 slack), last row equal to e_K.
class CohortMatrix {
 public:
  static constexpr double kRowSumSlack = 1e-9;

  explicit CohortMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 2) throw DimensionError("cohort matrix must be square with K >= 2");
    const Eigen::Index k = m_.rows();
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j)
        if (!(m_(i, j) >= 0.0 && m_(i, j) <= 1.0))
          throw DomainError("cohort entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") outside [0,1]");
      if (m_.row(i).sum() > 1.0 + kRowSumSlack)
        throw DomainError("cohort row " + std::to_string(i + 1) + " sums to more than one");
    }
    for (Eigen::Index j = 0; j < k; ++j)
      if (std::abs(m_(k - 1, j) - (j == k - 1 ? 1.0 : 0.0)) > kRowSumSlack)
        throw DomainError("cohort last row must be the absorbing default row");
  }

  int k() const noexcept { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }

 private:
  Matrix m_;
};

/// Strictly positive, unnormalized redistribution weights.
class WeightMatrix {
 public:
  explicit WeightMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw DimensionError("weight matrix must be square");
    for (Eigen::Index i = 0; i < m_.rows(); ++i)
      for (Eigen::Index j = 0; j < m_.cols(); ++j)
        if (!(m_(i, j) > 0.0) || !std::isfinite(m_(i, j)))
          throw DomainError("weight (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") is not strictly positive");
  }

  const Matrix& matrix() const noexcept { return m_; }

 private:
  Matrix m_;
};

/// w_i = 1 - sum_j R_ij. Round-off below zero is clipped so w_i lies in [0, 1].
inline Vector withdrawal_rates(const CohortMatrix& r) {
  Vector w = (1.0 - r.matrix().rowwise().sum().array()).matrix();
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = std::clamp(w[i], 0.0, 1.0);
  w[w.size() - 1] = 0.0;
  return w;
}

/// R + w * nu, nu_ij = F_ij / sum_j F_ij. Each row gains exactly its missing mass.
inline StochasticMatrix reconstruct(const CohortMatrix& r, const WeightMatrix& f) {
  if (f.matrix().rows() != r.matrix().rows()) throw DimensionError("weight matrix and cohort matrix differ in size");
  const Vector w = withdrawal_rates(r);
  const Vector row_totals = f.matrix().rowwise().sum();
  Matrix out = r.matrix();
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += w[i] * (f.matrix()(i, j) / row_totals[i]);
  return StochasticMatrix(std::move(out), kInternalTolerance);
}

/// Weight providers replacing a learned redistribution.
namespace weights {

inline WeightMatrix uniform(int k) { return WeightMatrix(Matrix::Ones(k, k)); }

/// Proportional to the surviving entries of each row; zero entries get `floor`
/// so the weights stay strictly positive.
inline WeightMatrix proportional(const CohortMatrix& r, double floor = 1e-12) {
  return WeightMatrix(r.matrix().cwiseMax(floor));
}

}  // namespace weights

/// Repairs every slice of a tenor series (1, 3, 6, 12 months, ...) independently.
inline std::vector<StochasticMatrix> reconstruct_series(const std::vector<CohortMatrix>& slices,
                                                        const std::function<WeightMatrix(const CohortMatrix&)>& provider) {
  std::vector<StochasticMatrix> out;
  out.reserve(slices.size());
  for (const auto& s : slices) out.push_back(reconstruct(s, provider(s)));
  return out;
}

/// D = |R_rec - R_cohort| elementwise.
inline Matrix distance_matrix(const Matrix& r_rec, const Matrix& r_cohort) {
  if (r_rec.rows() != r_cohort.rows() || r_rec.cols() != r_cohort.cols())
    throw DimensionError("distance_matrix operands differ in size");
  return (r_rec - r_cohort).cwiseAbs();
}

/// R^A = R_cohort + rho (.) D, with eta_i = sum_j D_ij and rho_ij = D_ij / eta_i
/// (zero where eta_i = 0).
inline Matrix adjusted_matrix(const Matrix& r_cohort, const Matrix& r_rec) {
  const Matrix d = distance_matrix(r_rec, r_cohort);
  const Vector eta = d.rowwise().sum();
  Matrix out = r_cohort;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (!(eta[i] > 0.0)) continue;
    for (Eigen::Index j = 0; j < d.cols(); ++j) out(i, j) += (d(i, j) / eta[i]) * d(i, j);
  }
  return out;
}

/// Two-point variance target (R_rec - R_adj)^2 elementwise.
inline Matrix uncertainty_target(const Matrix& r_rec, const Matrix& r_adj) {
  if (r_rec.rows() != r_adj.rows() || r_rec.cols() != r_adj.cols())
    throw DimensionError("uncertainty_target operands differ in size");
  return (r_rec - r_adj).array().square().matrix();
}

}  // namespace ratingxva
