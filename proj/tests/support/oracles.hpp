#pragma once

// Independent reference computations used as test oracles. Deliberately
// naive: no Eigen decompositions, plain loops.

#include "drme/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

using drme::Index;
using drme::Matrix;

// Gauss-Jordan elimination with partial pivoting on [A | I].
inline Matrix gauss_jordan_inverse(const Matrix& a) {
  const Index n = a.rows();
  std::vector<std::vector<double>> w(static_cast<std::size_t>(n),
                                     std::vector<double>(static_cast<std::size_t>(2 * n), 0.0));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) w[i][j] = a(i, j);
    w[i][n + i] = 1.0;
  }
  for (Index col = 0; col < n; ++col) {
    Index pivot = col;
    for (Index r = col + 1; r < n; ++r) {
      if (std::abs(w[r][col]) > std::abs(w[pivot][col])) pivot = r;
    }
    if (w[pivot][col] == 0.0) throw std::runtime_error("singular");
    std::swap(w[pivot], w[col]);
    const double p = w[col][col];
    for (Index j = 0; j < 2 * n; ++j) w[col][j] /= p;
    for (Index r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = w[r][col];
      if (f == 0.0) continue;
      for (Index j = 0; j < 2 * n; ++j) w[r][j] -= f * w[col][j];
    }
  }
  Matrix inv(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) inv(i, j) = w[i][n + j];
  }
  return inv;
}

inline Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.cols(); ++j)
      for (Index k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(k, j);
  return out;
}

inline double gauss(const double* v, const double* y, Index d, double ell) {
  double s = 0.0;
  for (Index k = 0; k < d; ++k) s += (v[k] - y[k]) * (v[k] - y[k]);
  return std::exp(-s / (2.0 * ell * ell));
}

// Gaussian kernel Gram between row sets, entry (r, c) = k(a_r, b_c).
inline Matrix gram(const Matrix& a, const Matrix& b, double ell) {
  Matrix out(a.rows(), b.rows());
  for (Index r = 0; r < a.rows(); ++r) {
    for (Index c = 0; c < b.rows(); ++c) {
      double s = 0.0;
      for (Index k = 0; k < a.cols(); ++k) s += (a(r, k) - b(c, k)) * (a(r, k) - b(c, k));
      out(r, c) = std::exp(-s / (2.0 * ell * ell));
    }
  }
  return out;
}

// Median of all pairwise Euclidean distances, full sort.
inline double pairwise_median(const Matrix& points) {
  std::vector<double> d;
  for (Index i = 0; i < points.rows(); ++i)
    for (Index j = i + 1; j < points.rows(); ++j) d.push_back((points.row(i) - points.row(j)).norm());
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size();
  return m % 2 == 1 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
}

} // namespace oracle
