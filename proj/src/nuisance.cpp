#include "drme/nuisance.hpp"

#include <algorithm>
#include <cmath>

namespace drme::nuisance {

namespace {

double sigmoid(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

void check_binary(const Eigen::VectorXi& a) {
  for (Index i = 0; i < a.size(); ++i) {
    if (a(i) != 0 && a(i) != 1) {
      throw InputError("treatment must be binary");
    }
  }
}

} // namespace

double PropensityModel::raw_treated(const Eigen::Ref<const RowVector>& x) const {
  if (x.size() != weights.size()) {
    throw InputError("propensity: covariate dimension mismatch");
  }
  return sigmoid(x.dot(weights) + intercept);
}

double PropensityModel::predict(const Eigen::Ref<const RowVector>& x, Arm arm) const {
  const double p1 = raw_treated(x);
  const double p = arm == Arm::treated ? p1 : 1.0 - p1;
  return std::clamp(p, clip_lo, clip_hi);
}

Vector PropensityModel::predict_all(const Matrix& x, Arm arm) const {
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    out(i) = predict(x.row(i), arm);
  }
  return out;
}

PropensityModel fit_propensity(const Matrix& x, const Eigen::VectorXi& a,
                               const PropensityOptions& options) {
  if (x.rows() != a.size() || x.rows() == 0) {
    throw InputError("fit_propensity: X and A must be nonempty with matching rows");
  }
  if (!(options.ridge >= 0.0)) {
    throw InputError("fit_propensity: ridge must be nonnegative");
  }
  if (!(options.clip_lo > 0.0 && options.clip_lo < options.clip_hi && options.clip_hi < 1.0)) {
    throw InputError("fit_propensity: need 0 < clip_lo < clip_hi < 1");
  }
  check_binary(a);
  const Index n_treated = a.sum();
  if (n_treated == 0 || n_treated == a.size()) {
    throw InputError("degenerate treatment assignment");
  }

  const Index n = x.rows();
  const Index d = x.cols();
  // Design with a trailing intercept column.
  Matrix design(n, d + 1);
  design.leftCols(d) = x;
  design.col(d).setOnes();
  const Vector target = a.cast<double>();
  Vector penalty = Vector::Constant(d + 1, options.ridge);
  penalty(d) = 0.0;

  auto objective = [&](const Vector& beta) {
    const Vector eta = design * beta;
    double loss = 0.0;
    for (Index i = 0; i < n; ++i) {
      loss += softplus(eta(i)) - target(i) * eta(i);
    }
    return loss / static_cast<double>(n) + 0.5 * beta.cwiseProduct(penalty).dot(beta);
  };

  Vector beta = Vector::Zero(d + 1);
  // Start the intercept at the marginal log-odds.
  const double frac = static_cast<double>(n_treated) / static_cast<double>(n);
  beta(d) = std::log(frac / (1.0 - frac));
  double current = objective(beta);

  PropensityModel model;
  model.clip_lo = options.clip_lo;
  model.clip_hi = options.clip_hi;
  model.converged = false;

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Vector eta = design * beta;
    Vector prob(n);
    Vector w(n);
    for (Index i = 0; i < n; ++i) {
      prob(i) = sigmoid(eta(i));
      w(i) = prob(i) * (1.0 - prob(i));
    }
    const Vector grad = design.transpose() * (prob - target) / static_cast<double>(n) +
                        penalty.cwiseProduct(beta);
    if (grad.lpNorm<Eigen::Infinity>() < options.tolerance) {
      model.converged = true;
      break;
    }
    Matrix hess = design.transpose() * w.asDiagonal() * design / static_cast<double>(n);
    hess.diagonal() += penalty;
    // Tiny jitter keeps the unpenalized intercept direction solvable on separable data.
    hess.diagonal().array() += 1e-12;
    const Eigen::LDLT<Matrix> ldlt(hess);
    const Vector step = ldlt.solve(grad);

    double scale = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      const Vector candidate = beta - scale * step;
      const double value = objective(candidate);
      if (std::isfinite(value) && value <= current) {
        beta = candidate;
        improved = value < current;
        current = value;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      // Objective is flat to machine precision; accept if the gradient is small in relative terms.
      model.converged = grad.lpNorm<Eigen::Infinity>() < 1e3 * options.tolerance;
      break;
    }
  }
  model.iterations = iter;
  model.weights = beta.head(d);
  model.intercept = beta(d);
  return model;
}

double predict_propensity(const PropensityModel& model, const Eigen::Ref<const RowVector>& x,
                          Arm arm) {
  return model.predict(x, arm);
}

OutcomeRegression::OutcomeRegression(kernels::GaussianKernel covariate_kernel,
                                     std::array<ArmFit, 2> arms)
    : covariate_kernel_(covariate_kernel), arms_(std::move(arms)) {}

Matrix OutcomeRegression::gram(Arm a, const Matrix& x_eval) const {
  return kernels::kernel_matrix(covariate_kernel_, x_eval, arm(a).x);
}

Matrix OutcomeRegression::solve(Arm a, const Matrix& rhs) const {
  return arm(a).factor.solve(rhs);
}

Matrix OutcomeRegression::targets(Arm a, const Matrix& locations,
                                  const kernels::GaussianKernel& outcome_kernel) const {
  return kernels::kernel_matrix(outcome_kernel, arm(a).y, locations);
}

Matrix OutcomeRegression::predict(Arm a, const Matrix& x_eval, const Matrix& locations,
                                  const kernels::GaussianKernel& outcome_kernel) const {
  if (x_eval.cols() != arm(a).x.cols()) {
    throw InputError("predict_m: covariate dimension mismatch");
  }
  if (locations.rows() == 0) {
    throw InputError("predict_m: empty location set");
  }
  if (locations.cols() != arm(a).y.cols()) {
    throw InputError("predict_m: location dimension mismatch");
  }
  return gram(a, x_eval) * solve(a, targets(a, locations, outcome_kernel));
}

OutcomeRegression fit_outcome_regression(const Matrix& x, const Eigen::VectorXi& a, const Matrix& y,
                                         const kernels::GaussianKernel& covariate_kernel,
                                         double ridge_control, double ridge_treated) {
  if (x.rows() != a.size() || y.rows() != a.size()) {
    throw InputError("fit_outcome_regression: row mismatch");
  }
  check_binary(a);
  std::array<OutcomeRegression::ArmFit, 2> arms;
  const std::array<double, 2> ridges{ridge_control, ridge_treated};
  for (int arm = 0; arm < 2; ++arm) {
    if (!(ridges[static_cast<std::size_t>(arm)] > 0.0)) {
      throw InputError("fit_outcome_regression: ridge must be positive");
    }
    std::vector<Index> rows;
    for (Index i = 0; i < a.size(); ++i) {
      if (a(i) == arm) {
        rows.push_back(i);
      }
    }
    if (rows.size() < 2) {
      throw InputError("fit_outcome_regression: each arm needs at least two units");
    }
    auto& fit = arms[static_cast<std::size_t>(arm)];
    fit.x = x(rows, Eigen::all);
    fit.y = y(rows, Eigen::all);
    fit.ridge = ridges[static_cast<std::size_t>(arm)];
    Matrix k = kernels::kernel_matrix(covariate_kernel, fit.x, fit.x);
    k.diagonal().array() += fit.ridge * static_cast<double>(rows.size());
    fit.factor.compute(k);
    if (fit.factor.info() != Eigen::Success || !k.allFinite()) {
      throw NumericError("covariate kernel matrix not PD");
    }
  }
  return OutcomeRegression(covariate_kernel, std::move(arms));
}

Matrix predict_m(const OutcomeRegression& regression, Arm a, const Matrix& x_eval,
                 const LocationSet& locations, const kernels::GaussianKernel& outcome_kernel) {
  return regression.predict(a, x_eval, locations.points, outcome_kernel);
}

double OracleGaussianNuisance::mean(Arm a, double prognostic_value, double v) const {
  const double l2 = lengthscale * lengthscale;
  const double total = l2 + noise_sd * noise_sd;
  // Same operation order as the Gaussian kernel so that noise_sd = 0 matches it bitwise.
  const double r = v - (prognostic_value + shift(a));
  return std::sqrt(l2 / total) * std::exp(-0.5 * (r * r) * (1.0 / total));
}

double OracleGaussianNuisance::mean_dv(Arm a, double prognostic_value, double v) const {
  const double total = lengthscale * lengthscale + noise_sd * noise_sd;
  const double r = v - (prognostic_value + shift(a));
  return -r / total * mean(a, prognostic_value, v);
}

double OracleGaussianNuisance::mean_dshift(Arm a, double prognostic_value, double v) const {
  return -mean_dv(a, prognostic_value, v);
}

void OracleGaussianNuisance::validate() const {
  if (!prognostic) {
    throw InputError("oracle nuisance: prognostic function not set");
  }
  if (!(noise_sd >= 0.0) || !(lengthscale > 0.0)) {
    throw InputError("oracle nuisance: need noise_sd >= 0 and lengthscale > 0");
  }
}

double oracle_m(const OracleGaussianNuisance& nuisance, Arm a, const Eigen::Ref<const RowVector>& x,
                double v) {
  nuisance.validate();
  return nuisance.mean(a, nuisance.prognostic(x), v);
}

} // namespace drme::nuisance
