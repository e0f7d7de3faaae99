#pragma once

namespace drme::stats {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed directly.
double gamma_q(double a, double x);

double chi2_cdf(double x, int df);
/// Survival function 1 - F_{chi2_df}(x); the p-value of a Hotelling statistic.
double chi2_sf(double x, int df);
/// Inverse CDF by bracketed bisection.
double chi2_quantile(double p, int df);

/// Poisson mixture sum_k e^{-nc/2} (nc/2)^k / k! F_{chi2_{df+2k}}(x), summed
/// outward from the Poisson mode and truncated once the remaining Poisson mass
/// is below 1e-14.
double noncentral_chi2_cdf(double x, int df, double nc);
double noncentral_chi2_sf(double x, int df, double nc);
double noncentral_chi2_quantile(double p, int df, double nc);

} // namespace drme::stats
