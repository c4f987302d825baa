#pragma once

// Reference computations used only by the tests. They avoid the library's
// numerical paths so agreement is evidence rather than a tautology.

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>

#include "ratingxva/lie.hpp"

#ifndef RATINGXVA_DATA_DIR
#define RATINGXVA_DATA_DIR "data"
#endif

namespace oracle {

using ratingxva::Matrix;
using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

inline std::string data(const std::string& name) { return std::string(RATINGXVA_DATA_DIR) + "/" + name; }

/// exp(A) by plain scaling and squaring around a 50-term Taylor series in long
/// double, without the diagonal shift the library uses.
inline Matrix taylor_exp(const Matrix& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  while (norm / std::ldexp(1.0, s) > 0.25) ++s;
  const LMatrix x = a.cast<long double>() / std::ldexp(1.0L, s);
  LMatrix term = LMatrix::Identity(a.rows(), a.cols());
  LMatrix sum = term;
  for (int j = 1; j <= 50; ++j) {
    term = (term * x).eval() / static_cast<long double>(j);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = (sum * sum).eval();
  return sum.cast<double>();
}

/// Random generator with off-diagonal rates uniform in [0, max_rate].
inline Matrix random_generator(int k, double max_rate, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, max_rate);
  Matrix a = Matrix::Zero(k, k);
  for (int i = 0; i + 1 < k; ++i) {
    for (int j = 0; j < k; ++j)
      if (j != i) a(i, j) = u(gen);
    a(i, i) = -(a.row(i).sum());
  }
  return a;
}

/// Directional derivative of exp at A along H, left-multiplied by exp(-A),
/// by central differences.
inline Matrix dexp_left_fd(const Matrix& a, const Matrix& h, double eps = 1e-6) {
  const Matrix d = (taylor_exp(a + eps * h) - taylor_exp(a - eps * h)) / (2 * eps);
  return taylor_exp(-a) * d;
}

}  // namespace oracle
