#pragma once

#include "drme/kernels.hpp"
#include "drme/types.hpp"

#include <array>
#include <functional>
#include <variant>

namespace drme::nuisance {

/// Clipped logistic propensity model pi(1 | x) = clip(sigmoid(w.x + b)).
struct PropensityModel {
  Vector weights;
  double intercept = 0.0;
  double clip_lo = 0.01;
  double clip_hi = 0.99;
  bool converged = true;
  int iterations = 0;

  /// Unclipped sigmoid(w.x + b).
  double raw_treated(const Eigen::Ref<const RowVector>& x) const;
  double predict(const Eigen::Ref<const RowVector>& x, Arm arm) const;
  /// Clipped probabilities of `arm` for every row of `x`.
  Vector predict_all(const Matrix& x, Arm arm) const;
};

struct PropensityOptions {
  double ridge = 1e-3;
  double clip_lo = 0.01;
  double clip_hi = 0.99;
  double tolerance = 1e-8;
  int max_iterations = 100;
};

/// Ridge-penalized logistic regression by damped Newton iteration. The
/// objective is the mean negative log-likelihood plus ridge/2 |w|^2; the
/// intercept is not penalized. Non-convergence sets `converged = false`.
PropensityModel fit_propensity(const Matrix& x, const Eigen::VectorXi& a,
                               const PropensityOptions& options = {});

double predict_propensity(const PropensityModel& model, const Eigen::Ref<const RowVector>& x,
                          Arm arm);

/// Per-arm kernel ridge regression of k_V(Y) on X.
///
/// Holds the arm's training rows and a Cholesky factor of
/// K_aa + ridge * n_a * I. Predictions for any location set are
/// G(X_eval) R_a U_a(V) with U_a(V) = K_Y(Y_a, V), so everything except
/// U_a depends only on the fit and the evaluation covariates.
class OutcomeRegression {
 public:
  struct ArmFit {
    Matrix x;
    Matrix y;
    double ridge = 0.0;
    Eigen::LLT<Matrix> factor;
  };

  OutcomeRegression(kernels::GaussianKernel covariate_kernel, std::array<ArmFit, 2> arms);

  const kernels::GaussianKernel& covariate_kernel() const { return covariate_kernel_; }
  const ArmFit& arm(Arm a) const { return arms_[static_cast<std::size_t>(arm_index(a))]; }

  /// G^X: covariate kernel between evaluation rows and the arm's training rows.
  Matrix gram(Arm a, const Matrix& x_eval) const;
  /// R_a * rhs.
  Matrix solve(Arm a, const Matrix& rhs) const;
  /// U_a(V), n_a x J.
  Matrix targets(Arm a, const Matrix& locations, const kernels::GaussianKernel& outcome_kernel) const;

  Matrix predict(Arm a, const Matrix& x_eval, const Matrix& locations,
                 const kernels::GaussianKernel& outcome_kernel) const;

 private:
  kernels::GaussianKernel covariate_kernel_;
  std::array<ArmFit, 2> arms_;
};

/// Requires at least two units per arm and positive ridges.
OutcomeRegression fit_outcome_regression(const Matrix& x, const Eigen::VectorXi& a, const Matrix& y,
                                         const kernels::GaussianKernel& covariate_kernel,
                                         double ridge_control, double ridge_treated);

Matrix predict_m(const OutcomeRegression& regression, Arm a, const Matrix& x_eval,
                 const LocationSet& locations, const kernels::GaussianKernel& outcome_kernel);

/// Closed-form m_a(x; v) for Y = g(x) + shift_a + N(0, noise_sd^2) under a
/// scalar Gaussian outcome kernel:
///   sqrt(l^2 / (l^2 + s^2)) exp(-(v - g(x) - shift_a)^2 / (2 (l^2 + s^2))).
struct OracleGaussianNuisance {
  std::function<double(const Eigen::Ref<const RowVector>&)> prognostic;
  double shift_control = 0.0;
  double shift_treated = 0.0;
  double noise_sd = 1.0;
  double lengthscale = 1.0;

  double shift(Arm a) const { return a == Arm::treated ? shift_treated : shift_control; }

  /// m_a given a precomputed g(x).
  double mean(Arm a, double prognostic_value, double v) const;
  /// d m_a / d v.
  double mean_dv(Arm a, double prognostic_value, double v) const;
  /// d m_a / d shift_a, the pathwise drift of a mean-shift path.
  double mean_dshift(Arm a, double prognostic_value, double v) const;

  void validate() const;
};

double oracle_m(const OracleGaussianNuisance& nuisance, Arm a, const Eigen::Ref<const RowVector>& x,
                double v);

/// The nuisance tuple (pi, m_0, m_1). `regression` is empty for scores that
/// never read the outcome regressions (ipw, naive).
struct NuisanceFit {
  PropensityModel propensity;
  std::variant<std::monostate, OutcomeRegression, OracleGaussianNuisance> regression;

  bool is_oracle() const { return std::holds_alternative<OracleGaussianNuisance>(regression); }
  bool has_regression() const { return !std::holds_alternative<std::monostate>(regression); }
};

} // namespace drme::nuisance
