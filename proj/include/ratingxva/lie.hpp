#pragma once

// The Lie algebra g>=0 of rating generators (zero row sums, nonnegative
// off-diagonals, absorbing last state) and the group G>=0 of stochastic
// matrices it exponentiates into.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ratingxva/error.hpp"

namespace ratingxva {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Row-sum tolerance for matrices produced internally (products of exponentials).
inline constexpr double kInternalTolerance = 1e-10;
/// Row-sum tolerance for published matrices, which are printed at 4-6 digits.
inline constexpr double kPublishedTolerance = 1e-3;

/// 0-based (row, column) position of a basis element E_lj - E_ll.
struct BasisPair {
  int row;
  int col;
  bool operator==(const BasisPair&) const = default;
};

/// Canonical coordinate order of g>=0: row-major over rows 1..K-1, skipping the
/// diagonal. For K = 4 the order is 1-2, 1-3, 1-4, 2-1, 2-3, 2-4, 3-1, 3-2, 3-4.
/// Every module addresses algebra coordinates through this map.
class BasisIndexMap {
 public:
  explicit BasisIndexMap(int k) : k_(k) {
    if (k < 2) throw DimensionError("rating count must be at least 2, got " + std::to_string(k));
    pairs_.reserve(static_cast<std::size_t>((k - 1) * (k - 1)));
    for (int row = 0; row < k - 1; ++row)
      for (int col = 0; col < k; ++col)
        if (col != row) pairs_.push_back({row, col});
  }

  int k() const noexcept { return k_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  const std::vector<BasisPair>& pairs() const noexcept { return pairs_; }

  /// Pair for 0-based coordinate index.
  BasisPair pair(std::size_t index) const {
    if (index >= pairs_.size()) throw DimensionError("basis index out of range: " + std::to_string(index));
    return pairs_[index];
  }

  /// 0-based coordinate index of the off-diagonal position (row, col).
  std::size_t coordinate(int row, int col) const {
    if (row < 0 || row >= k_ - 1 || col < 0 || col >= k_ || row == col)
      throw DimensionError("(" + std::to_string(row + 1) + "," + std::to_string(col + 1) +
                           ") is not a basis position for K=" + std::to_string(k_));
    return static_cast<std::size_t>(row * (k_ - 1) + (col < row ? col : col - 1));
  }

  /// "from-to" label with 1-based ratings, e.g. "2-1".
  std::string label(std::size_t index) const {
    const auto p = pair(index);
    return std::to_string(p.row + 1) + "-" + std::to_string(p.col + 1);
  }

 private:
  int k_;
  std::vector<BasisPair> pairs_;
};

inline BasisIndexMap basis_index_map(int k) { return BasisIndexMap(k); }

/// (K-1)^2 nonnegative coordinates of an element of g>=0.
class AlgebraCoeffs {
 public:
  AlgebraCoeffs(int k, Vector coeffs) : k_(k), coeffs_(std::move(coeffs)) {
    if (k < 2) throw DimensionError("rating count must be at least 2");
    if (coeffs_.size() != static_cast<Eigen::Index>((k - 1) * (k - 1)))
      throw DimensionError("expected " + std::to_string((k - 1) * (k - 1)) + " coefficients, got " +
                           std::to_string(coeffs_.size()));
    for (Eigen::Index i = 0; i < coeffs_.size(); ++i)
      if (!(coeffs_[i] >= 0.0))
        throw DomainError("coefficient " + std::to_string(i + 1) + " is negative or NaN; element lies outside g>=0");
  }

  static AlgebraCoeffs zero(int k) { return AlgebraCoeffs(k, Vector::Zero((k - 1) * (k - 1))); }

  int k() const noexcept { return k_; }
  const Vector& coeffs() const noexcept { return coeffs_; }

 private:
  int k_;
  Vector coeffs_;
};

namespace detail {

// Writes sum_i c_i E_i into out (resized to k x k). No sign checks.
inline void assemble_generator(int k, std::span<const double> coeffs, Matrix& out) {
  out.setZero(k, k);
  std::size_t idx = 0;
  for (int row = 0; row < k - 1; ++row) {
    double total = 0.0;
    for (int col = 0; col < k; ++col) {
      if (col == row) continue;
      out(row, col) = coeffs[idx];
      total += coeffs[idx];
      ++idx;
    }
    out(row, row) = -total;
  }
}

// Scratch buffers reused across exponentials in hot loops.
struct ExpWorkspace {
  Matrix shifted, term, next, sum;
};

// exp(A) for A with nonnegative off-diagonals. The core shifts A/2^s by its
// largest diagonal magnitude so the Taylor series sums nonnegative terms only;
// squaring then keeps every entry nonnegative.
inline void expm_metzler_into(const Matrix& a, Matrix& out, ExpWorkspace& ws) {
  const Eigen::Index n = a.rows();
  double shift = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) shift = std::max(shift, -a(i, i));
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }
  const double scaled_shift = shift * scale;

  ws.shifted = a * scale;
  ws.shifted.diagonal().array() += scaled_shift;

  ws.sum.setIdentity(n, n);
  ws.term.setIdentity(n, n);
  for (int j = 1; j <= 30; ++j) {
    ws.next.noalias() = ws.term * ws.shifted;
    ws.term = ws.next / static_cast<double>(j);
    ws.sum += ws.term;
    if (ws.term.maxCoeff() <= 1e-18 * ws.sum.maxCoeff()) break;
  }
  out = ws.sum * std::exp(-scaled_shift);
  for (int s = 0; s < squarings; ++s) {
    ws.next.noalias() = out * out;
    out.swap(ws.next);
  }
  // A zero row of A is a unit row of exp(A); pin it against round-off so
  // absorbing and frozen states stay exact.
  for (Eigen::Index i = 0; i < n; ++i)
    if ((a.row(i).array() == 0.0).all()) {
      out.row(i).setZero();
      out(i, i) = 1.0;
    }
}

}  // namespace detail

/// A = sum_i c_i E_i: off-diagonals carry the coefficients, the diagonal makes
/// each row sum to zero, and the last row is zero.
inline Matrix algebra_from_coeffs(const AlgebraCoeffs& c) {
  Matrix out;
  detail::assemble_generator(c.k(), std::span<const double>(c.coeffs().data(), static_cast<std::size_t>(c.coeffs().size())), out);
  return out;
}

/// Per-check outcome of validate_stochastic.
struct StochasticityReport {
  Vector row_sum_deviation;                // sum_j R_ij - 1, signed
  std::vector<BasisPair> negative_entries;  // R_ij < -tol
  std::vector<BasisPair> entries_above_one; // R_ij > 1 + tol
  double absorbing_row_deviation = 0.0;     // max |R_Kj - delta_Kj|
  bool passes = false;

  double max_row_sum_deviation() const { return row_sum_deviation.cwiseAbs().maxCoeff(); }
};

inline StochasticityReport validate_stochastic(const Matrix& r, double tol) {
  if (r.rows() != r.cols() || r.rows() < 1) throw DimensionError("validate_stochastic needs a square matrix");
  const Eigen::Index k = r.rows();
  StochasticityReport rep;
  rep.row_sum_deviation = r.rowwise().sum().array() - 1.0;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      if (r(i, j) < -tol || std::isnan(r(i, j))) rep.negative_entries.push_back({int(i), int(j)});
      if (r(i, j) > 1.0 + tol) rep.entries_above_one.push_back({int(i), int(j)});
    }
  for (Eigen::Index j = 0; j < k; ++j)
    rep.absorbing_row_deviation = std::max(rep.absorbing_row_deviation, std::abs(r(k - 1, j) - (j == k - 1 ? 1.0 : 0.0)));
  rep.passes = rep.row_sum_deviation.cwiseAbs().maxCoeff() <= tol && rep.negative_entries.empty() &&
               rep.entries_above_one.empty() && rep.absorbing_row_deviation <= tol;
  return rep;
}

/// Row-stochastic K x K matrix whose last row is the last unit vector.
class StochasticMatrix {
 public:
  /// Validates at the given tolerance; throws DomainError on failure.
  explicit StochasticMatrix(Matrix m, double tol = kInternalTolerance) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 2) throw DimensionError("stochastic matrix must be square with K >= 2");
    const auto rep = validate_stochastic(m_, tol);
    if (!rep.passes) {
      throw DomainError("matrix is not stochastic with absorbing default (max row-sum deviation " +
                        std::to_string(rep.max_row_sum_deviation()) + ")");
    }
  }

  static StochasticMatrix identity(int k) { return StochasticMatrix(Matrix::Identity(k, k)); }

  int k() const noexcept { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// exp(A) for A in g>=0, by scaling and squaring around a shifted Taylor core.
/// Throws DomainError when A is not a generator (row sums beyond 1e-12 relative
/// to its largest diagonal magnitude, negative off-diagonals, nonzero last row).
inline StochasticMatrix mat_exp(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() < 2) throw DimensionError("mat_exp needs a square matrix with K >= 2");
  const Eigen::Index k = a.rows();
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(a.row(i).sum()) > 1e-12 * scale)
      throw DomainError("generator row " + std::to_string(i + 1) + " does not sum to zero");
    for (Eigen::Index j = 0; j < k; ++j)
      if (i != j && !(a(i, j) >= 0.0)) throw DomainError("generator has a negative off-diagonal entry");
  }
  if (a.row(k - 1).cwiseAbs().maxCoeff() != 0.0) throw DomainError("generator last row must be zero (absorbing default)");
  Matrix out;
  detail::ExpWorkspace ws;
  detail::expm_metzler_into(a, out, ws);
  return StochasticMatrix(std::move(out), kInternalTolerance);
}

/// ad_A(H) = AH - HA.
inline Matrix ad(const Matrix& a, const Matrix& h) {
  if (a.rows() != a.cols() || h.rows() != h.cols() || a.rows() != h.rows())
    throw DimensionError("ad needs two square matrices of equal size");
  return a * h - h * a;
}

/// Truncated L_{-A}(H) = sum_{k < terms} ad_{-A}^k(H) / (k+1)!, the factor in
/// d/dA exp(A) H = exp(A) L_{-A}(H). Verification only.
inline Matrix dexp_L(const Matrix& a, const Matrix& h, int terms) {
  if (terms < 1) throw DomainError("dexp_L needs at least one term");
  if (a.rows() != a.cols() || h.rows() != h.cols() || a.rows() != h.rows())
    throw DimensionError("dexp_L needs two square matrices of equal size");
  const Matrix minus_a = -a;
  Matrix power = h;  // ad_{-A}^k(H)
  Matrix sum = h;    // k = 0 term, 1/1!
  double factorial = 1.0;
  for (int k = 1; k < terms; ++k) {
    power = minus_a * power - power * minus_a;
    factorial *= static_cast<double>(k + 1);
    sum += power / factorial;
  }
  return sum;
}

}  // namespace ratingxva
