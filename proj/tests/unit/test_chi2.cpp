#include "drme/chi2.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>

using namespace drme::stats;

namespace {

// Composite Simpson rule with an even number of panels.
double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) {
    sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

double central_density(double x, int df) {
  if (x <= 0.0) return df == 2 ? 0.5 : 0.0;
  const double k = 0.5 * df;
  return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::log(2.0) - std::lgamma(k));
}

// Noncentral density for df = 2: 0.5 exp(-(x + nc)/2) I_0(sqrt(nc x)).
double noncentral_density_df2(double x, double nc) {
  return 0.5 * std::exp(-0.5 * (x + nc)) * std::cyl_bessel_i(0.0, std::sqrt(nc * x));
}

} // namespace

TEST_CASE("chi2_sf at zero is one") {
  for (int df = 1; df <= 12; ++df) {
    CHECK(chi2_sf(0.0, df) == 1.0);
    CHECK(chi2_cdf(0.0, df) == 0.0);
  }
}

TEST_CASE("chi2_sf matches the df = 2 closed form on [0, 50]") {
  double worst = 0.0;
  for (int i = 0; i <= 500; ++i) {
    const double x = 0.1 * i;
    worst = std::max(worst, std::abs(chi2_sf(x, 2) - std::exp(-0.5 * x)));
  }
  CHECK(worst < 1e-12);
  CHECK(std::abs(chi2_sf(5.991465, 2) - 0.05) < 1e-6);
  CHECK(std::abs(chi2_sf(-2.0 * std::log(0.05), 2) - 0.05) < 1e-12);
}

TEST_CASE("chi2 df = 5 against numerical integration of the density") {
  const double x = 11.0705;
  const double cdf = simpson([](double t) { return central_density(t, 5); }, 0.0, x, 20000);
  CHECK(std::abs(chi2_cdf(x, 5) - cdf) < 1e-9);
  CHECK(std::abs(chi2_sf(x, 5) - 0.05) < 1e-4);
  for (const double t : {0.5, 2.0, 4.5, 9.0, 20.0}) {
    const double oracle = simpson([](double s) { return central_density(s, 5); }, 0.0, t, 20000);
    CHECK(std::abs(chi2_cdf(t, 5) - oracle) < 1e-9);
  }
}

TEST_CASE("cdf and sf are complementary across regimes") {
  for (int df : {1, 2, 3, 7, 30}) {
    for (const double x : {0.01, 0.7, 3.0, 12.0, 45.0, 120.0}) {
      CHECK(chi2_cdf(x, df) + chi2_sf(x, df) == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(gamma_p(0.5 * df, 0.5 * x) == doctest::Approx(chi2_cdf(x, df)).epsilon(1e-13));
      CHECK(gamma_q(0.5 * df, 0.5 * x) == doctest::Approx(chi2_sf(x, df)).epsilon(1e-12));
    }
  }
  // Far tail stays positive and tiny instead of cancelling to zero.
  CHECK(chi2_sf(200.0, 2) > 0.0);
  CHECK(chi2_sf(200.0, 2) == doctest::Approx(std::exp(-100.0)).epsilon(1e-10));
}

TEST_CASE("chi2_quantile inverts the cdf") {
  CHECK(std::abs(chi2_quantile(0.95, 2) + 2.0 * std::log(0.05)) < 1e-9);
  for (int df : {1, 2, 5, 10}) {
    for (const double p : {0.01, 0.25, 0.5, 0.9, 0.95, 0.999}) {
      CHECK(chi2_cdf(chi2_quantile(p, df), df) == doctest::Approx(p).epsilon(1e-9));
    }
  }
}

TEST_CASE("noncentral chi2 with zero noncentrality equals the central law") {
  for (int df : {1, 2, 3, 6}) {
    for (const double x : {0.0, 0.3, 2.0, 5.991465, 15.0, 40.0}) {
      CHECK(std::abs(noncentral_chi2_cdf(x, df, 0.0) - chi2_cdf(x, df)) < 1e-12);
    }
  }
}

TEST_CASE("noncentral chi2 df = 2 against the Bessel density") {
  for (const double nc : {0.553, 2.0, 8.851, 25.0}) {
    for (const double x : {1.0, 5.991465, 14.0}) {
      const double oracle =
          simpson([nc](double t) { return noncentral_density_df2(t, nc); }, 0.0, x, 20000);
      CHECK(std::abs(noncentral_chi2_cdf(x, 2, nc) - oracle) < 1e-9);
    }
  }
}

TEST_CASE("noncentral power at the 5% threshold matches the published theory column") {
  const double crit = chi2_quantile(0.95, 2);
  CHECK(std::abs(noncentral_chi2_sf(crit, 2, 8.851) - 0.763) < 1e-3);
  CHECK(std::abs(noncentral_chi2_sf(crit, 2, 0.553) - 0.094) < 1e-3);
}

TEST_CASE("noncentral cdf is monotone and its quantile inverts it") {
  double previous = 0.0;
  for (int i = 1; i <= 60; ++i) {
    const double value = noncentral_chi2_cdf(0.5 * i, 3, 4.0);
    CHECK(value >= previous);
    previous = value;
  }
  // More noncentrality moves mass right.
  CHECK(noncentral_chi2_cdf(6.0, 2, 1.0) > noncentral_chi2_cdf(6.0, 2, 3.0));
  for (const double p : {0.05, 0.5, 0.95}) {
    const double q = noncentral_chi2_quantile(p, 2, 3.7);
    CHECK(noncentral_chi2_cdf(q, 2, 3.7) == doctest::Approx(p).epsilon(1e-9));
  }
}
