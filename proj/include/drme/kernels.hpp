#pragma once

#include "drme/types.hpp"

#include <cstdint>

namespace drme::kernels {

/// Gaussian kernel k(v, y) = exp(-|v - y|^2 / (2 l^2)).
///
/// With `dim_normalized` set the squared distance is divided by the ambient
/// dimension first, which keeps the bandwidth on a per-coordinate scale for
/// very high-dimensional outcomes (images, long vectors).
class GaussianKernel {
 public:
  explicit GaussianKernel(double lengthscale = 1.0, bool dim_normalized = false);

  double lengthscale() const { return lengthscale_; }
  bool dim_normalized() const { return dim_normalized_; }

  /// Kernel value from a precomputed squared distance in `dim` dimensions.
  double from_sq_distance(double sq_dist, Index dim) const;

  /// Scale factor c such that grad_v k(v, y) = -c (v - y) k(v, y).
  double gradient_scale(Index dim) const;

 private:
  double lengthscale_;
  bool dim_normalized_;
};

/// Dimension rule for the default `dim_normalized` flag.
inline bool default_dim_normalized(Index dim) { return dim >= 100; }

double kernel_eval(const GaussianKernel& kernel, const Eigen::Ref<const RowVector>& v,
                   const Eigen::Ref<const RowVector>& y);

/// Entry (r, j) is k(cols_j, rows_r). Rows and cols hold one point per row.
Matrix kernel_matrix(const GaussianKernel& kernel, const Matrix& rows, const Matrix& cols);

/// Gradient of k(v, y) with respect to v.
RowVector kernel_grad_first(const GaussianKernel& kernel, const Eigen::Ref<const RowVector>& v,
                            const Eigen::Ref<const RowVector>& y);

/// Median pairwise Euclidean distance. Samples without replacement down to
/// `cap` points first (deterministic in `seed`).
double median_heuristic(const Matrix& points, std::uint64_t seed = 0, Index cap = 1000);

} // namespace drme::kernels
