#pragma once

#include "drme/kernels.hpp"
#include "drme/nuisance.hpp"
#include "drme/types.hpp"

#include <array>
#include <optional>
#include <string>

namespace drme {

/// Which observed-data score builds the witness features.
///   dr    : augmented inverse-propensity contrast (doubly robust)
///   ipw   : inverse-propensity contrast, regressions dropped
///   dm    : regression contrast m_1(X; V) - m_0(X; V)
///   naive : unadjusted two-sample contrast standardized by arm fractions
enum class ScoreKind { dr, ipw, dm, naive };

std::string to_string(ScoreKind kind);
ScoreKind parse_score_kind(const std::string& name);

/// Arm-specific augmented feature for one unit and one location:
/// 1{A = a} / pi_a * (k - r_a) + r_a.
double arm_feature(int treatment, Arm arm, double propensity_arm, double kernel_value,
                   double regression_value);

/// Doubly robust contrast row phi^1 - phi^0 for one unit.
RowVector dr_contrast_row(int treatment, double propensity_control, double propensity_treated,
                          const Eigen::Ref<const RowVector>& kernel_values,
                          const Eigen::Ref<const RowVector>& regression_control,
                          const Eigen::Ref<const RowVector>& regression_treated);

/// Pseudo-feature evaluator bound to one evaluation split and one nuisance fit.
///
/// Every score kind has the row form
///   z_rj = c_r k(v_j, Y_r) + b1_r m_1(X_r; v_j) - b0_r m_0(X_r; v_j),
/// so the per-row weights c, b0, b1 and the covariate Gram matrices against
/// the regression training rows are computed once and reused for every
/// candidate location set. Column j depends on v_j alone.
///
/// The engine keeps a pointer to `nuisances`, which must outlive it.
class FeatureEngine {
 public:
  FeatureEngine(const Dataset& split, const nuisance::NuisanceFit& nuisances,
                kernels::GaussianKernel outcome_kernel, ScoreKind kind);

  Index rows() const { return y_.rows(); }
  Index outcome_dim() const { return y_.cols(); }
  ScoreKind kind() const { return kind_; }
  const kernels::GaussianKernel& outcome_kernel() const { return outcome_kernel_; }

  /// m x J feature matrix for the given J x d_Y locations.
  Matrix features(const Matrix& locations) const;

  /// Row j is sum_r w_r d z_rj / d v_j (J x d_Y).
  Matrix weighted_jacobian(const Matrix& locations, const Vector& row_weights) const;

 private:
  void add_regression(Arm arm, const Matrix& locations, double sign, Matrix& z) const;

  const nuisance::NuisanceFit* nuisances_;
  kernels::GaussianKernel outcome_kernel_;
  ScoreKind kind_;
  Matrix y_;
  Vector own_weight_;
  std::array<Vector, 2> regression_weight_;
  std::array<Matrix, 2> gram_;   // kernel ridge: G^X for the split, per arm
  Vector prognostic_;            // oracle: g(X_r)
};

struct PseudoFeatureMatrix {
  Matrix values; // n x J
  LocationSet locations;
  ScoreKind kind = ScoreKind::dr;
};

PseudoFeatureMatrix pseudo_features(ScoreKind kind, const Dataset& split,
                                    const LocationSet& locations,
                                    const nuisance::NuisanceFit& nuisances,
                                    const kernels::GaussianKernel& outcome_kernel);

PseudoFeatureMatrix dr_pseudo_features(const Dataset& split, const LocationSet& locations,
                                       const nuisance::NuisanceFit& nuisances,
                                       const kernels::GaussianKernel& outcome_kernel);
PseudoFeatureMatrix ipw_pseudo_features(const Dataset& split, const LocationSet& locations,
                                        const nuisance::NuisanceFit& nuisances,
                                        const kernels::GaussianKernel& outcome_kernel);
PseudoFeatureMatrix dm_pseudo_features(const Dataset& split, const LocationSet& locations,
                                       const nuisance::NuisanceFit& nuisances,
                                       const kernels::GaussianKernel& outcome_kernel);
PseudoFeatureMatrix naive_pseudo_features(const Dataset& split, const LocationSet& locations,
                                          const nuisance::NuisanceFit& nuisances,
                                          const kernels::GaussianKernel& outcome_kernel);

struct MeanCov {
  Vector mean;
  Matrix covariance;
};

/// Column means and the unbiased (n - 1) sample covariance.
MeanCov mean_and_cov(const Matrix& features);

/// n mean' (cov + gamma I)^{-1} mean via Cholesky.
double hotelling_statistic(const Vector& mean, const Matrix& cov, Index n, double gamma);

/// 1e-3 * (tr(S) / J) / sqrt(n), floored at 1e-10.
double default_test_ridge(const Matrix& cov, Index n_test);

/// Outcome of a finite-location test on one evaluation split.
struct TestResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  LocationSet locations;
  Index n_test = 0;
  double gamma = 0.0;
  Vector mean;
  Matrix covariance;

  // Run metadata filled in by the pipeline.
  double alpha = 0.05;
  bool reject = false;
  bool diagnostic_only = false;
  ScoreKind score = ScoreKind::dr;
  std::string selection;
  std::string criterion;
  double tau = 0.0;
  double outcome_lengthscale = 0.0;
  bool outcome_dim_normalized = false;
  double covariate_lengthscale = 0.0;
  std::array<double, 2> outcome_ridges{0.0, 0.0};
  double propensity_ridge = 0.0;
  bool propensity_converged = true;
  Index n_nuisance = 0;
  Index n_train = 0;
  std::vector<Index> test_indices;
  std::uint64_t seed = 0;
  int split_attempts = 1;
};

/// Statistic, df and p-value from a feature matrix; gamma defaults to the
/// scale-relative policy.
TestResult hotelling_test(const PseudoFeatureMatrix& features, std::optional<double> gamma = {});

} // namespace drme
