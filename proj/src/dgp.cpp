#include "drme/dgp.hpp"

#include "drme/chi2.hpp"
#include "drme/drscore.hpp"
#include "drme/kernels.hpp"
#include "drme/locations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace drme::dgp {

namespace {

constexpr double kClipLo = 0.06;
constexpr double kClipHi = 0.94;

bool is_vector_design(Scenario s) { return s == Scenario::two_bump_null || s == Scenario::two_bump; }

// 0 = no bump, 1 or 2 = bump region, each with probability p.
int draw_region(std::mt19937_64& rng, double p) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  if (u < p) return 1;
  if (u < 2.0 * p) return 2;
  return 0;
}

double quadratic(const Vector& eta, const Matrix& cov, double ridge) {
  Matrix a = cov;
  a.diagonal().array() += ridge;
  const Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) {
    throw NumericError("pilot covariance factorization failed");
  }
  return eta.dot(ldlt.solve(eta));
}

} // namespace

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::sharp_null: return "sharp_null";
    case Scenario::mean_shift: return "mean_shift";
    case Scenario::variance_shift: return "variance_shift";
    case Scenario::localized_bump: return "localized_bump";
    case Scenario::two_bump_null: return "two_bump_null";
    case Scenario::two_bump: return "two_bump";
    case Scenario::local_path: return "local_path";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& name) {
  if (name == "sharp_null" || name == "null") return Scenario::sharp_null;
  if (name == "mean_shift") return Scenario::mean_shift;
  if (name == "variance_shift") return Scenario::variance_shift;
  if (name == "localized_bump" || name == "bump") return Scenario::localized_bump;
  if (name == "two_bump_null") return Scenario::two_bump_null;
  if (name == "two_bump") return Scenario::two_bump;
  if (name == "local_path") return Scenario::local_path;
  throw InputError("unknown scenario '" + name + "'");
}

bool is_null(Scenario scenario, double h) {
  return scenario == Scenario::sharp_null || scenario == Scenario::two_bump_null ||
         (scenario == Scenario::local_path && h == 0.0);
}

double prognostic(const Eigen::Ref<const RowVector>& x) {
  if (x.size() < kCovariateDim) {
    throw InputError("prognostic: need five covariates");
  }
  return 0.90 * x(0) + 0.60 * std::sin(x(1)) + 0.35 * (x(2) * x(2) - 1.0) + 0.25 * x(0) * x(3) -
         0.20 * std::cos(x(4));
}

nuisance::PropensityModel true_propensity() {
  nuisance::PropensityModel model;
  model.weights = Vector::Zero(kCovariateDim);
  model.weights << 0.90, -0.75, 0.55, -0.40, 0.0;
  model.intercept = 0.0;
  model.clip_lo = kClipLo;
  model.clip_hi = kClipHi;
  return model;
}

std::pair<RowVector, RowVector> two_bump_directions(Index outcome_dim) {
  if (outcome_dim < 2) {
    throw InputError("two-bump design needs at least two outcome coordinates");
  }
  RowVector v1 = RowVector::Zero(outcome_dim);
  RowVector v2 = RowVector::Zero(outcome_dim);
  v1(0) = 1.0;
  v2((outcome_dim + 1) / 2) = 1.0; // 1-based ceil(d/2) + 1
  return {v1, v2};
}

GeneratedData gen_scenario(Scenario scenario, Index n, std::mt19937_64& rng,
                           const ScenarioParams& params) {
  if (n < 1) {
    throw InputError("gen_scenario: n must be positive");
  }
  const bool vector_design = is_vector_design(scenario);
  const Index dy = vector_design ? params.outcome_dim : 1;
  if (vector_design && dy < 2) {
    throw InputError("gen_scenario: two-bump outcome dimension must be at least 2");
  }
  const double delta =
      scenario == Scenario::local_path ? params.h / std::sqrt(static_cast<double>(n)) : 0.0;
  const nuisance::PropensityModel pi = true_propensity();

  GeneratedData out;
  out.data.x.resize(n, kCovariateDim);
  out.data.a.resize(n);
  out.data.y.resize(n, dy);
  out.y0.resize(n, dy);
  out.y1.resize(n, dy);
  out.propensity.resize(n);
  out.prognostic.resize(n);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  RowVector v1;
  RowVector v2;
  if (vector_design) {
    std::tie(v1, v2) = two_bump_directions(dy);
  }
  const double bump_scale = std::sqrt(kBumpProbability * (1.0 - kBumpProbability));

  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < kCovariateDim; ++k) {
      out.data.x(i, k) = normal(rng);
    }
    const auto x = out.data.x.row(i);
    const double g = prognostic(x);
    const double p1 = pi.predict(x, Arm::treated);
    const int a = unif(rng) < p1 ? 1 : 0;
    out.prognostic(i) = g;
    out.propensity(i) = p1;
    out.data.a(i) = a;
    // Vector designs spread g(X) evenly over the coordinates: |mu(X)| = |g(X)|.
    const double g_vec = vector_design ? g / std::sqrt(static_cast<double>(dy)) : g;

    switch (scenario) {
      case Scenario::sharp_null: {
        const double y = g + normal(rng);
        out.y0(i, 0) = y;
        out.y1(i, 0) = y;
        break;
      }
      case Scenario::mean_shift:
        out.y0(i, 0) = g + normal(rng);
        out.y1(i, 0) = g + normal(rng) + kMeanShift;
        break;
      case Scenario::variance_shift:
        out.y0(i, 0) = g + normal(rng);
        out.y1(i, 0) = g + kVarianceScale * normal(rng);
        break;
      case Scenario::localized_bump: {
        out.y0(i, 0) = g + normal(rng);
        const double e1 = normal(rng);
        const double b = unif(rng) < kBumpProbability ? 1.0 : 0.0;
        out.y1(i, 0) = g + e1 + (b - kBumpProbability) / bump_scale;
        break;
      }
      case Scenario::local_path:
        out.y0(i, 0) = g + normal(rng);
        out.y1(i, 0) = g + normal(rng) + delta;
        break;
      case Scenario::two_bump_null: {
        for (Index k = 0; k < dy; ++k) {
          const double y = g_vec + normal(rng);
          out.y0(i, k) = y;
          out.y1(i, k) = y;
        }
        break;
      }
      case Scenario::two_bump: {
        for (Index k = 0; k < dy; ++k) {
          out.y0(i, k) = g_vec + normal(rng);
        }
        for (Index k = 0; k < dy; ++k) {
          out.y1(i, k) = g_vec + normal(rng);
        }
        // Centered indicators keep each arm's added component mean zero.
        const int b0 = draw_region(rng, kTwoBumpProbability);
        const int b1 = draw_region(rng, kTwoBumpProbability);
        const double p = kTwoBumpProbability;
        out.y0.row(i) -= kTwoBumpSize * (((b0 == 1) - p) * v1 + ((b0 == 2) - p) * v2);
        out.y1.row(i) += kTwoBumpSize * (((b1 == 1) - p) * v1 + ((b1 == 2) - p) * v2);
        break;
      }
    }
    out.data.y.row(i) = a == 1 ? out.y1.row(i) : out.y0.row(i);
  }
  return out;
}

nuisance::OracleGaussianNuisance local_path_oracle(double lengthscale, double delta) {
  nuisance::OracleGaussianNuisance oracle;
  oracle.prognostic = [](const Eigen::Ref<const RowVector>& x) { return prognostic(x); };
  oracle.shift_control = 0.0;
  oracle.shift_treated = delta;
  oracle.noise_sd = 1.0;
  oracle.lengthscale = lengthscale;
  oracle.validate();
  return oracle;
}

nuisance::NuisanceFit local_path_nuisances(double lengthscale, double delta) {
  nuisance::NuisanceFit fit;
  fit.propensity = true_propensity();
  fit.regression = local_path_oracle(lengthscale, delta);
  return fit;
}

LocalPathSpec LocalPathSpec::reference() {
  LocalPathSpec spec;
  spec.locations.resize(2, 1);
  spec.locations << -2.6752, 3.9031;
  return spec;
}

double theory_power(double h, double noncentrality, int df, double alpha) {
  const double threshold = stats::chi2_quantile(1.0 - alpha, df);
  return stats::noncentral_chi2_sf(threshold, df, h * h * noncentrality);
}

std::vector<double> theory_curve(const LocalPathSpec& spec, const std::vector<double>& h_grid,
                                 double alpha) {
  const int df = static_cast<int>(spec.locations.rows());
  std::vector<double> out;
  out.reserve(h_grid.size());
  for (const double h : h_grid) {
    out.push_back(theory_power(h, spec.noncentrality, df, alpha));
  }
  return out;
}

LocalPathSpec PilotResult::spec() const {
  LocalPathSpec s;
  s.locations = locations.points;
  s.lengthscale = lengthscale;
  s.noncentrality = noncentrality;
  return s;
}

PilotResult pilot_localize(Index n_pilot, Index dictionary_size, Index num_locations,
                           std::optional<double> tau, std::mt19937_64& rng) {
  if (n_pilot < 10 || dictionary_size < num_locations || num_locations < 1) {
    throw InputError("pilot_localize: need n_pilot >= 10 and 1 <= J <= M");
  }
  const GeneratedData pilot = gen_scenario(Scenario::local_path, n_pilot, rng, {});
  const double lengthscale = kernels::median_heuristic(pilot.data.y, rng());
  const nuisance::NuisanceFit nuisances = local_path_nuisances(lengthscale, 0.0);
  const auto& oracle = std::get<nuisance::OracleGaussianNuisance>(nuisances.regression);

  const locations::Dictionary dict =
      locations::sample_dictionary(pilot.data.y, dictionary_size, rng);
  const Index M = dict.size();
  double combos = 1.0;
  for (Index k = 0; k < num_locations; ++k) {
    combos *= static_cast<double>(M - k) / static_cast<double>(k + 1);
  }
  if (combos > 1e6) {
    throw InputError("pilot_localize: too many candidate subsets for exhaustive search");
  }
  const FeatureEngine engine(pilot.data, nuisances, kernels::GaussianKernel(lengthscale),
                             ScoreKind::dr);
  const MeanCov mc = mean_and_cov(engine.features(dict.candidates));

  Vector eta = Vector::Zero(M);
  for (Index r = 0; r < n_pilot; ++r) {
    const double g = pilot.prognostic(r);
    for (Index j = 0; j < M; ++j) {
      eta(j) += oracle.mean_dshift(Arm::treated, g, dict.candidates(j, 0));
    }
  }
  eta /= static_cast<double>(n_pilot);

  const double ridge =
      tau.value_or(std::max(1e-3 * mc.covariance.trace() / static_cast<double>(M), 1e-8));

  // Exhaustive search over J-subsets in lexicographic order; ties keep the first.
  std::vector<Index> current(static_cast<std::size_t>(num_locations));
  std::iota(current.begin(), current.end(), Index{0});
  std::vector<Index> best = current;
  double best_value = -1.0;
  while (true) {
    const double value = quadratic(eta(current), mc.covariance(current, current), ridge);
    if (value > best_value) {
      best_value = value;
      best = current;
    }
    Index pos = num_locations - 1;
    while (pos >= 0 && current[static_cast<std::size_t>(pos)] == M - num_locations + pos) {
      --pos;
    }
    if (pos < 0) {
      break;
    }
    ++current[static_cast<std::size_t>(pos)];
    for (Index k = pos + 1; k < num_locations; ++k) {
      current[static_cast<std::size_t>(k)] = current[static_cast<std::size_t>(k - 1)] + 1;
    }
  }

  PilotResult out;
  out.locations = locations::make_dictionary_set(dict, best, LocationSet::Provenance::fixed);
  out.lengthscale = lengthscale;
  out.drift = eta(best);
  out.covariance = mc.covariance(best, best);
  out.noncentrality = quadratic(out.drift, out.covariance, 0.0);
  out.proxy = best_value;
  out.tau = ridge;
  out.n_pilot = n_pilot;
  out.dictionary_size = M;
  return out;
}

} // namespace drme::dgp
