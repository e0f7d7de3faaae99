#include "drme/chi2.hpp"

#include "drme/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace drme::stats {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 10000;

double log_prefactor(double a, double x) {
  return -x + a * std::log(x) - std::lgamma(a);
}

// Series for P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) {
      break;
    }
  }
  return sum * std::exp(log_prefactor(a, x));
}

// Continued fraction for Q(a, x) by the modified Lentz method, valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) {
      d = kTiny;
    }
    c = b + an / c;
    if (std::abs(c) < kTiny) {
      c = kTiny;
    }
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) {
      break;
    }
  }
  return std::exp(log_prefactor(a, x)) * h;
}

void check_gamma_args(double a, double x) {
  if (!(a > 0.0)) {
    throw InputError("incomplete gamma: shape must be positive");
  }
  if (!(x >= 0.0)) {
    throw InputError("incomplete gamma: argument must be nonnegative");
  }
}

void check_df(int df) {
  if (df < 1) {
    throw InputError("chi-square: degrees of freedom must be a positive integer");
  }
}

template <class Cdf>
double invert_cdf(double p, Cdf cdf, double start) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InputError("quantile: probability must lie in [0, 1]");
  }
  if (p == 0.0) {
    return 0.0;
  }
  if (p == 1.0) {
    return std::numeric_limits<double>::infinity();
  }
  double lo = 0.0;
  double hi = std::max(start, 1.0);
  while (cdf(hi) < p) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace

double gamma_p(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) {
    return 0.0;
  }
  if (std::isinf(x)) {
    return 1.0;
  }
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
}

double gamma_q(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) {
    return 1.0;
  }
  if (std::isinf(x)) {
    return 0.0;
  }
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_fraction(a, x);
}

double chi2_cdf(double x, int df) {
  check_df(df);
  if (!(x >= 0.0)) {
    throw InputError("chi2_cdf: x must be nonnegative");
  }
  return gamma_p(0.5 * df, 0.5 * x);
}

double chi2_sf(double x, int df) {
  check_df(df);
  if (!(x >= 0.0)) {
    throw InputError("chi2_sf: x must be nonnegative");
  }
  return gamma_q(0.5 * df, 0.5 * x);
}

double chi2_quantile(double p, int df) {
  check_df(df);
  return invert_cdf(p, [df](double x) { return chi2_cdf(x, df); }, static_cast<double>(df));
}

namespace {

// sum_k Poisson(k; nc/2) * term(k).
template <class Term>
double poisson_mixture(double nc, Term term) {
  const double lambda = 0.5 * nc;
  const double mode = std::floor(lambda);
  const double log_w0 = -lambda + mode * std::log(lambda) - std::lgamma(mode + 1.0);
  const double w0 = std::exp(log_w0);
  constexpr double kTail = 1e-14;

  double sum = w0 * term(static_cast<int>(mode));
  // Upward from the mode.
  double w = w0;
  for (int k = static_cast<int>(mode) + 1; k < static_cast<int>(mode) + 100000; ++k) {
    w *= lambda / static_cast<double>(k);
    sum += w * term(k);
    const double ratio = lambda / static_cast<double>(k + 1);
    if (ratio < 1.0 && w * ratio / (1.0 - ratio) < kTail) {
      break;
    }
  }
  // Downward from the mode.
  w = w0;
  for (int k = static_cast<int>(mode) - 1; k >= 0; --k) {
    w *= static_cast<double>(k + 1) / lambda;
    sum += w * term(k);
    const double ratio = static_cast<double>(k) / lambda;
    if (ratio < 1.0 && w * ratio / (1.0 - ratio) < kTail) {
      break;
    }
  }
  return sum;
}

void check_noncentral(double x, int df, double nc) {
  check_df(df);
  if (!(x >= 0.0)) {
    throw InputError("noncentral chi-square: x must be nonnegative");
  }
  if (!(nc >= 0.0) || !std::isfinite(nc)) {
    throw InputError("noncentral chi-square: noncentrality must be finite and nonnegative");
  }
}

} // namespace

double noncentral_chi2_cdf(double x, int df, double nc) {
  check_noncentral(x, df, nc);
  if (nc == 0.0) {
    return chi2_cdf(x, df);
  }
  return poisson_mixture(nc, [&](int k) { return gamma_p(0.5 * df + k, 0.5 * x); });
}

double noncentral_chi2_sf(double x, int df, double nc) {
  check_noncentral(x, df, nc);
  if (nc == 0.0) {
    return chi2_sf(x, df);
  }
  return poisson_mixture(nc, [&](int k) { return gamma_q(0.5 * df + k, 0.5 * x); });
}

double noncentral_chi2_quantile(double p, int df, double nc) {
  check_df(df);
  return invert_cdf(p, [&](double x) { return noncentral_chi2_cdf(x, df, nc); },
                    static_cast<double>(df) + nc);
}

} // namespace drme::stats
