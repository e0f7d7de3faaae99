#pragma once

#include "drme/nuisance.hpp"
#include "drme/types.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace drme::dgp {

/// Synthetic designs on the shared confounded base: X ~ N(0, I_5), clipped
/// logistic treatment, prognostic mean g(X).
enum class Scenario {
  sharp_null,     // Y(0) = Y(1) = g(X) + e
  mean_shift,     // Y(1) gets +0.35
  variance_shift, // Y(1) noise scaled by 1.45
  localized_bump, // Y(1) gets a centered, unit-variance Bernoulli(0.12) component
  two_bump_null,  // vector outcome, Y(0) = Y(1)
  two_bump,       // vector outcome, rare mass moved toward two sparse directions
  local_path      // Y(1) gets +h / sqrt(n)
};

std::string to_string(Scenario scenario);
Scenario parse_scenario(const std::string& name);
bool is_null(Scenario scenario, double h = 0.0);

struct ScenarioParams {
  Index outcome_dim = 5; // two-bump designs only
  double h = 0.0;        // local path only
};

inline constexpr Index kCovariateDim = 5;
inline constexpr double kMeanShift = 0.35;
inline constexpr double kVarianceScale = 1.45;
inline constexpr double kBumpProbability = 0.12;
inline constexpr double kTwoBumpProbability = 0.04;
inline constexpr double kTwoBumpSize = 4.0;

/// g(x) = 0.90 x1 + 0.60 sin x2 + 0.35 (x3^2 - 1) + 0.25 x1 x4 - 0.20 cos x5.
double prognostic(const Eigen::Ref<const RowVector>& x);

/// The true treatment mechanism as a clipped logistic model.
nuisance::PropensityModel true_propensity();

/// Unit directions of the two-bump design: e_1 and e_{ceil(d/2)+1}.
std::pair<RowVector, RowVector> two_bump_directions(Index outcome_dim);

/// Observed data plus the generator's hidden quantities. Only `data` may be
/// handed to an estimator.
struct GeneratedData {
  Dataset data;
  Matrix y0;
  Matrix y1;
  Vector propensity; // true pi(1 | X)
  Vector prognostic; // g(X)
};

GeneratedData gen_scenario(Scenario scenario, Index n, std::mt19937_64& rng,
                           const ScenarioParams& params = {});

/// Closed-form kernel regressions for the local path with treated shift `delta`.
nuisance::OracleGaussianNuisance local_path_oracle(double lengthscale, double delta);

/// True propensity plus closed-form regressions for the local path.
nuisance::NuisanceFit local_path_nuisances(double lengthscale, double delta);

/// Frozen pilot quantities for the local-path study.
struct LocalPathSpec {
  Matrix locations;   // J x 1
  double lengthscale = 1.4289;
  double noncentrality = 0.1383; // lambda_V for h = 1
  double noise_sd = 1.0;

  static LocalPathSpec reference();
};

/// 1 - F_{chi2_df(h^2 lambda)}(chi2_df quantile at 1 - alpha).
double theory_power(double h, double noncentrality, int df, double alpha);

std::vector<double> theory_curve(const LocalPathSpec& spec, const std::vector<double>& h_grid,
                                 double alpha);

struct PilotResult {
  LocationSet locations;
  double lengthscale = 0.0;
  double noncentrality = 0.0; // eta' Sigma^{-1} eta at the chosen locations
  double proxy = 0.0;         // eta' (Sigma + tau I)^{-1} eta
  double tau = 0.0;
  Vector drift;               // eta
  Matrix covariance;          // Sigma
  Index n_pilot = 0;
  Index dictionary_size = 0;

  LocalPathSpec spec() const;
};

/// Selects J locations on a null pilot sample with true nuisances by
/// exhaustive search over the dictionary for the largest
/// eta' (Sigma + tau I)^{-1} eta, where eta is the pathwise drift of the
/// witness under a treated mean shift and Sigma the DR feature covariance.
PilotResult pilot_localize(Index n_pilot, Index dictionary_size, Index num_locations,
                           std::optional<double> tau, std::mt19937_64& rng);

} // namespace drme::dgp
