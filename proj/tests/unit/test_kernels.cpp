#include "drme/kernels.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace drme;
using kernels::GaussianKernel;

namespace {

RowVector row(std::initializer_list<double> values) {
  RowVector r(static_cast<Index>(values.size()));
  Index k = 0;
  for (double v : values) r(k++) = v;
  return r;
}

Matrix random_points(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < d; ++k) m(i, k) = normal(rng);
  return m;
}

} // namespace

TEST_CASE("kernel_eval closed forms") {
  const GaussianKernel k(1.0);
  CHECK(kernels::kernel_eval(k, row({0.3, -1.2}), row({0.3, -1.2})) == 1.0);
  CHECK(kernels::kernel_eval(k, row({0.0}), row({1.0})) == doctest::Approx(0.6065306597126334).epsilon(1e-15));
  const GaussianKernel flat(1e6);
  CHECK(std::abs(kernels::kernel_eval(flat, row({0.0}), row({1.0})) - 1.0) < 1e-9);
  CHECK_THROWS_AS(kernels::kernel_eval(k, row({0.0}), row({1.0, 2.0})), InputError);
  CHECK_THROWS_AS(GaussianKernel(0.0), InputError);
}

TEST_CASE("dim-normalized kernel divides the squared distance by d") {
  const GaussianKernel k(1.0, true);
  const double value = kernels::kernel_eval(k, row({0.0, 0.0, 0.0, 0.0}), row({1.0, 1.0, 1.0, 1.0}));
  CHECK(value == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK_FALSE(kernels::default_dim_normalized(5));
  CHECK(kernels::default_dim_normalized(784));
}

TEST_CASE("kernel symmetry and bounds") {
  const GaussianKernel k(0.7);
  const Matrix p = random_points(40, 3, 1);
  for (Index i = 0; i + 1 < p.rows(); i += 2) {
    const double a = kernels::kernel_eval(k, p.row(i), p.row(i + 1));
    CHECK(a == kernels::kernel_eval(k, p.row(i + 1), p.row(i)));
    CHECK(a > 0.0);
    CHECK(a < 1.0);
  }
}

TEST_CASE("kernel_matrix equals the double loop exactly") {
  const GaussianKernel k(1.3);
  const Matrix rows = random_points(5, 2, 7);
  const Matrix cols = random_points(3, 2, 8);
  const Matrix m = kernels::kernel_matrix(k, rows, cols);
  for (Index r = 0; r < 5; ++r)
    for (Index j = 0; j < 3; ++j) CHECK(m(r, j) == kernels::kernel_eval(k, cols.row(j), rows.row(r)));

  Matrix dup(2, 2);
  dup << 1.0, 2.0, 1.0, 2.0;
  const Matrix d = kernels::kernel_matrix(k, dup, cols.leftCols(2));
  CHECK(d.row(0) == d.row(1));
  const Matrix single = kernels::kernel_matrix(k, dup.topRows(1), dup.topRows(1));
  CHECK(single(0, 0) == 1.0);
  CHECK_THROWS_AS(kernels::kernel_matrix(k, Matrix(0, 2), cols), InputError);
}

TEST_CASE("kernel gradient closed form and finite differences") {
  const GaussianKernel k(1.0);
  CHECK(kernels::kernel_grad_first(k, row({1.0}), row({0.0}))(0) ==
        doctest::Approx(-0.6065306597126334).epsilon(1e-15));
  CHECK(kernels::kernel_grad_first(k, row({0.4, 0.1}), row({0.4, 0.1})).norm() == 0.0);

  for (bool normalized : {false, true}) {
    const GaussianKernel kk(0.9, normalized);
    const Matrix p = random_points(200, 3, 3);
    for (Index i = 0; i < 200; i += 2) {
      const RowVector v = p.row(i);
      const RowVector y = p.row(i + 1);
      const RowVector g = kernels::kernel_grad_first(kk, v, y);
      for (Index c = 0; c < 3; ++c) {
        RowVector up = v, down = v;
        up(c) += 1e-5;
        down(c) -= 1e-5;
        const double fd = (kernels::kernel_eval(kk, up, y) - kernels::kernel_eval(kk, down, y)) / 2e-5;
        CHECK(std::abs(fd - g(c)) <= 1e-6 * std::max(std::abs(g(c)), 1e-3));
      }
    }
  }
}

TEST_CASE("median heuristic") {
  Matrix two(2, 1);
  two << 0.0, 2.0;
  CHECK(kernels::median_heuristic(two) == 2.0);
  Matrix three(3, 1);
  three << 0.0, 1.0, 2.0;
  CHECK(kernels::median_heuristic(three) == 1.0);

  const Matrix p = random_points(100, 1, 11);
  CHECK(kernels::median_heuristic(p, 5) == doctest::Approx(oracle::pairwise_median(p)).epsilon(1e-14));

  Matrix same = Matrix::Constant(4, 2, 1.5);
  CHECK_THROWS_WITH_AS(kernels::median_heuristic(same), "degenerate sample for bandwidth", InputError);

  // Subsampling above the cap is deterministic in the seed.
  const Matrix big = random_points(1500, 2, 12);
  CHECK(kernels::median_heuristic(big, 3) == kernels::median_heuristic(big, 3));
  CHECK(kernels::median_heuristic(big, 3) > 0.0);
}
