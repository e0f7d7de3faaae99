#include "drme/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace drme::kernels {

namespace {

// Plain left-to-right accumulation so every entry point agrees to the ulp.
template <class A, class B>
double sq_distance(const A& v, const B& y) {
  double acc = 0.0;
  for (Index k = 0; k < v.size(); ++k) {
    const double diff = v(k) - y(k);
    acc += diff * diff;
  }
  return acc;
}

void check_dims(Index a, Index b) {
  if (a != b) {
    throw InputError("kernel: dimension mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

} // namespace

GaussianKernel::GaussianKernel(double lengthscale, bool dim_normalized)
    : lengthscale_(lengthscale), dim_normalized_(dim_normalized) {
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw InputError("kernel: lengthscale must be positive and finite");
  }
}

double GaussianKernel::from_sq_distance(double sq_dist, Index dim) const {
  return std::exp(-0.5 * sq_dist * gradient_scale(dim));
}

double GaussianKernel::gradient_scale(Index dim) const {
  const double scale = 1.0 / (lengthscale_ * lengthscale_);
  return dim_normalized_ ? scale / static_cast<double>(dim) : scale;
}

double kernel_eval(const GaussianKernel& kernel, const Eigen::Ref<const RowVector>& v,
                   const Eigen::Ref<const RowVector>& y) {
  check_dims(v.size(), y.size());
  return kernel.from_sq_distance(sq_distance(v, y), v.size());
}

Matrix kernel_matrix(const GaussianKernel& kernel, const Matrix& rows, const Matrix& cols) {
  if (rows.rows() == 0 || cols.rows() == 0) {
    throw InputError("kernel_matrix: empty point set");
  }
  check_dims(rows.cols(), cols.cols());
  const Index dim = rows.cols();
  Matrix out(rows.rows(), cols.rows());
  for (Index j = 0; j < cols.rows(); ++j) {
    const auto v = cols.row(j);
    for (Index r = 0; r < rows.rows(); ++r) {
      out(r, j) = kernel.from_sq_distance(sq_distance(v, rows.row(r)), dim);
    }
  }
  return out;
}

RowVector kernel_grad_first(const GaussianKernel& kernel, const Eigen::Ref<const RowVector>& v,
                            const Eigen::Ref<const RowVector>& y) {
  check_dims(v.size(), y.size());
  const double k = kernel.from_sq_distance(sq_distance(v, y), v.size());
  return -(kernel.gradient_scale(v.size()) * k) * (v - y);
}

double median_heuristic(const Matrix& points, std::uint64_t seed, Index cap) {
  if (points.rows() < 2) {
    throw InputError("degenerate sample for bandwidth");
  }
  std::vector<Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  if (cap > 1 && points.rows() > cap) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(static_cast<std::size_t>(cap));
  }

  std::vector<double> dists;
  dists.reserve(order.size() * (order.size() - 1) / 2);
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      dists.push_back(std::sqrt(sq_distance(points.row(order[i]), points.row(order[j]))));
    }
  }

  auto median_of = [](std::vector<double>& values) {
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                     values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) {
      return upper;
    }
    const double lower =
        *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
  };

  double median = median_of(dists);
  if (median > 0.0) {
    return median;
  }
  // Heavy ties at zero: fall back to the median of the nonzero distances.
  std::erase_if(dists, [](double d) { return !(d > 0.0); });
  if (dists.empty()) {
    throw InputError("degenerate sample for bandwidth");
  }
  return median_of(dists);
}

} // namespace drme::kernels
