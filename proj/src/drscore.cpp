#include "drme/drscore.hpp"

#include "drme/chi2.hpp"

#include <cmath>

namespace drme {

std::string to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::dr: return "dr";
    case ScoreKind::ipw: return "ipw";
    case ScoreKind::dm: return "dm";
    case ScoreKind::naive: return "naive";
  }
  return "unknown";
}

ScoreKind parse_score_kind(const std::string& name) {
  if (name == "dr") return ScoreKind::dr;
  if (name == "ipw") return ScoreKind::ipw;
  if (name == "dm") return ScoreKind::dm;
  if (name == "naive") return ScoreKind::naive;
  throw InputError("unknown score kind '" + name + "'");
}

double arm_feature(int treatment, Arm arm, double propensity_arm, double kernel_value,
                   double regression_value) {
  if (!(propensity_arm > 0.0)) {
    throw NumericError("propensity prediction at or below 0");
  }
  const double indicator = treatment == arm_index(arm) ? 1.0 : 0.0;
  return indicator / propensity_arm * (kernel_value - regression_value) + regression_value;
}

RowVector dr_contrast_row(int treatment, double propensity_control, double propensity_treated,
                          const Eigen::Ref<const RowVector>& kernel_values,
                          const Eigen::Ref<const RowVector>& regression_control,
                          const Eigen::Ref<const RowVector>& regression_treated) {
  const Index J = kernel_values.size();
  if (regression_control.size() != J || regression_treated.size() != J) {
    throw InputError("dr_contrast_row: length mismatch");
  }
  RowVector out(J);
  for (Index j = 0; j < J; ++j) {
    out(j) = arm_feature(treatment, Arm::treated, propensity_treated, kernel_values(j),
                         regression_treated(j)) -
             arm_feature(treatment, Arm::control, propensity_control, kernel_values(j),
                         regression_control(j));
  }
  return out;
}

FeatureEngine::FeatureEngine(const Dataset& split, const nuisance::NuisanceFit& nuisances,
                             kernels::GaussianKernel outcome_kernel, ScoreKind kind)
    : nuisances_(&nuisances), outcome_kernel_(outcome_kernel), kind_(kind), y_(split.y) {
  split.validate();
  const Index m = split.size();
  if (m == 0) {
    throw InputError("pseudo-features: empty evaluation split");
  }

  own_weight_ = Vector::Zero(m);
  regression_weight_ = {Vector::Zero(m), Vector::Zero(m)};

  if (kind == ScoreKind::naive) {
    const double n1 = static_cast<double>(split.count_arm(Arm::treated));
    const double n0 = static_cast<double>(m) - n1;
    if (n1 == 0.0 || n0 == 0.0) {
      throw InputError("naive score: evaluation split lacks one treatment arm");
    }
    const double p1 = n1 / static_cast<double>(m);
    const double p0 = n0 / static_cast<double>(m);
    for (Index r = 0; r < m; ++r) {
      own_weight_(r) = split.a(r) == 1 ? 1.0 / p1 : -1.0 / p0;
    }
    return;
  }

  if (kind == ScoreKind::dm) {
    regression_weight_[0].setOnes();
    regression_weight_[1].setOnes();
  } else {
    for (Index r = 0; r < m; ++r) {
      const auto x = split.x.row(r);
      const double p1 = nuisances.propensity.predict(x, Arm::treated);
      const double p0 = nuisances.propensity.predict(x, Arm::control);
      if (!(p1 > 0.0) || !(p0 > 0.0)) {
        throw NumericError("propensity prediction at or below 0");
      }
      const double d1 = split.a(r) == 1 ? 1.0 / p1 : 0.0;
      const double d0 = split.a(r) == 0 ? 1.0 / p0 : 0.0;
      own_weight_(r) = d1 - d0;
      if (kind == ScoreKind::dr) {
        regression_weight_[1](r) = 1.0 - d1;
        regression_weight_[0](r) = 1.0 - d0;
      }
    }
  }
  if (kind == ScoreKind::ipw) {
    return;
  }

  if (!nuisances.has_regression()) {
    throw InputError("score '" + to_string(kind) + "' needs fitted outcome regressions");
  }
  if (const auto* oracle = std::get_if<nuisance::OracleGaussianNuisance>(&nuisances.regression)) {
    oracle->validate();
    if (split.outcome_dim() != 1) {
      throw InputError("oracle nuisance requires scalar outcomes");
    }
    if (outcome_kernel.lengthscale() != oracle->lengthscale) {
      throw InputError("oracle nuisance lengthscale differs from the outcome kernel");
    }
    prognostic_.resize(m);
    for (Index r = 0; r < m; ++r) {
      prognostic_(r) = oracle->prognostic(split.x.row(r));
    }
  } else {
    const auto& reg = std::get<nuisance::OutcomeRegression>(nuisances.regression);
    if (reg.arm(Arm::control).y.cols() != split.outcome_dim()) {
      throw InputError("outcome regression fitted on a different outcome dimension");
    }
    gram_[0] = reg.gram(Arm::control, split.x);
    gram_[1] = reg.gram(Arm::treated, split.x);
  }
}

void FeatureEngine::add_regression(Arm arm, const Matrix& locations, double sign,
                                   Matrix& z) const {
  const auto a = static_cast<std::size_t>(arm_index(arm));
  const Vector& weight = regression_weight_[a];
  if (const auto* oracle = std::get_if<nuisance::OracleGaussianNuisance>(&nuisances_->regression)) {
    for (Index j = 0; j < locations.rows(); ++j) {
      const double v = locations(j, 0);
      for (Index r = 0; r < z.rows(); ++r) {
        z(r, j) += sign * weight(r) * oracle->mean(arm, prognostic_(r), v);
      }
    }
    return;
  }
  const auto& reg = std::get<nuisance::OutcomeRegression>(nuisances_->regression);
  const Matrix fitted = gram_[a] * reg.solve(arm, reg.targets(arm, locations, outcome_kernel_));
  z += sign * (weight.asDiagonal() * fitted);
}

Matrix FeatureEngine::features(const Matrix& locations) const {
  if (locations.rows() == 0) {
    throw InputError("pseudo-features: empty location set");
  }
  if (locations.cols() != y_.cols()) {
    throw InputError("pseudo-features: location dimension mismatch");
  }
  Matrix z = own_weight_.asDiagonal() * kernels::kernel_matrix(outcome_kernel_, y_, locations);
  if (kind_ == ScoreKind::dr || kind_ == ScoreKind::dm) {
    add_regression(Arm::treated, locations, 1.0, z);
    add_regression(Arm::control, locations, -1.0, z);
  }
  return z;
}

Matrix FeatureEngine::weighted_jacobian(const Matrix& locations, const Vector& row_weights) const {
  if (row_weights.size() != rows()) {
    throw InputError("weighted_jacobian: weight length mismatch");
  }
  if (locations.cols() != y_.cols()) {
    throw InputError("weighted_jacobian: location dimension mismatch");
  }
  const Index J = locations.rows();
  const Index d = locations.cols();
  const double scale = outcome_kernel_.gradient_scale(d);

  // sum_s coef_s grad_v k(v, pts_s) = -scale * sum_s coef_s k(v, pts_s) (v - pts_s)
  auto accumulate = [&](const Matrix& pts, const Vector& coef, Index j, RowVector& out) {
    const auto v = locations.row(j);
    for (Index s = 0; s < pts.rows(); ++s) {
      if (coef(s) == 0.0) {
        continue;
      }
      double sq = 0.0;
      for (Index k = 0; k < d; ++k) {
        const double diff = v(k) - pts(s, k);
        sq += diff * diff;
      }
      const double kv = outcome_kernel_.from_sq_distance(sq, d);
      out -= (scale * coef(s) * kv) * (v - pts.row(s));
    }
  };

  Matrix out = Matrix::Zero(J, d);
  const Vector own = row_weights.cwiseProduct(own_weight_);
  for (Index j = 0; j < J; ++j) {
    RowVector g = RowVector::Zero(d);
    accumulate(y_, own, j, g);
    out.row(j) = g;
  }
  if (kind_ != ScoreKind::dr && kind_ != ScoreKind::dm) {
    return out;
  }

  for (Arm arm : {Arm::treated, Arm::control}) {
    const auto a = static_cast<std::size_t>(arm_index(arm));
    const double sign = arm == Arm::treated ? 1.0 : -1.0;
    const Vector weighted = row_weights.cwiseProduct(regression_weight_[a]);
    if (const auto* oracle =
            std::get_if<nuisance::OracleGaussianNuisance>(&nuisances_->regression)) {
      for (Index j = 0; j < J; ++j) {
        double acc = 0.0;
        for (Index r = 0; r < rows(); ++r) {
          acc += weighted(r) * oracle->mean_dv(arm, prognostic_(r), locations(j, 0));
        }
        out(j, 0) += sign * acc;
      }
      continue;
    }
    // d M(r, v_j) = sum_s W(r, s) grad k(v_j, Y_a,s) with W = G R, so the
    // row-weighted pullback only needs R G' w.
    const auto& reg = std::get<nuisance::OutcomeRegression>(nuisances_->regression);
    const Vector coef = reg.solve(arm, gram_[a].transpose() * weighted);
    const Vector signed_coef = sign * coef;
    for (Index j = 0; j < J; ++j) {
      RowVector g = RowVector::Zero(d);
      accumulate(reg.arm(arm).y, signed_coef, j, g);
      out.row(j) += g;
    }
  }
  return out;
}

PseudoFeatureMatrix pseudo_features(ScoreKind kind, const Dataset& split,
                                    const LocationSet& locations,
                                    const nuisance::NuisanceFit& nuisances,
                                    const kernels::GaussianKernel& outcome_kernel) {
  const FeatureEngine engine(split, nuisances, outcome_kernel, kind);
  PseudoFeatureMatrix out;
  out.values = engine.features(locations.points);
  out.locations = locations;
  out.kind = kind;
  return out;
}

PseudoFeatureMatrix dr_pseudo_features(const Dataset& split, const LocationSet& locations,
                                       const nuisance::NuisanceFit& nuisances,
                                       const kernels::GaussianKernel& outcome_kernel) {
  return pseudo_features(ScoreKind::dr, split, locations, nuisances, outcome_kernel);
}

PseudoFeatureMatrix ipw_pseudo_features(const Dataset& split, const LocationSet& locations,
                                        const nuisance::NuisanceFit& nuisances,
                                        const kernels::GaussianKernel& outcome_kernel) {
  return pseudo_features(ScoreKind::ipw, split, locations, nuisances, outcome_kernel);
}

PseudoFeatureMatrix dm_pseudo_features(const Dataset& split, const LocationSet& locations,
                                       const nuisance::NuisanceFit& nuisances,
                                       const kernels::GaussianKernel& outcome_kernel) {
  return pseudo_features(ScoreKind::dm, split, locations, nuisances, outcome_kernel);
}

PseudoFeatureMatrix naive_pseudo_features(const Dataset& split, const LocationSet& locations,
                                          const nuisance::NuisanceFit& nuisances,
                                          const kernels::GaussianKernel& outcome_kernel) {
  return pseudo_features(ScoreKind::naive, split, locations, nuisances, outcome_kernel);
}

MeanCov mean_and_cov(const Matrix& features) {
  const Index n = features.rows();
  if (n < 2) {
    throw InputError("mean_and_cov: need at least two rows");
  }
  MeanCov out;
  out.mean = features.colwise().mean().transpose();
  const Matrix centered = features.rowwise() - out.mean.transpose();
  out.covariance = (centered.transpose() * centered) / static_cast<double>(n - 1);
  // Exact symmetry for downstream Cholesky.
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

double hotelling_statistic(const Vector& mean, const Matrix& cov, Index n, double gamma) {
  const Index J = mean.size();
  if (cov.rows() != J || cov.cols() != J) {
    throw InputError("hotelling_statistic: covariance shape mismatch");
  }
  if (!(gamma > 0.0)) {
    throw InputError("hotelling_statistic: gamma must be positive");
  }
  if (n < 1) {
    throw InputError("hotelling_statistic: n must be positive");
  }
  Matrix a = cov;
  a.diagonal().array() += gamma;
  const Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success || !a.allFinite()) {
    throw NumericError("non-PSD covariance input");
  }
  const Vector u = llt.solve(mean);
  return std::max(0.0, static_cast<double>(n) * mean.dot(u));
}

double default_test_ridge(const Matrix& cov, Index n_test) {
  const double avg_var = cov.trace() / static_cast<double>(cov.rows());
  return std::max(1e-3 * avg_var / std::sqrt(static_cast<double>(n_test)), 1e-10);
}

TestResult hotelling_test(const PseudoFeatureMatrix& features, std::optional<double> gamma) {
  const MeanCov mc = mean_and_cov(features.values);
  TestResult result;
  result.n_test = features.values.rows();
  result.df = static_cast<int>(features.values.cols());
  result.gamma = gamma ? *gamma : default_test_ridge(mc.covariance, result.n_test);
  result.statistic = hotelling_statistic(mc.mean, mc.covariance, result.n_test, result.gamma);
  result.p_value = stats::chi2_sf(result.statistic, result.df);
  result.locations = features.locations;
  result.mean = mc.mean;
  result.covariance = mc.covariance;
  result.score = features.kind;
  return result;
}

} // namespace drme
