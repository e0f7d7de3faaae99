#pragma once

#include "drme/drscore.hpp"
#include "drme/locations.hpp"
#include "drme/nuisance.hpp"
#include "drme/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace drme::pipeline {

enum class Selection { greedy, exhaustive, gradient, random, fixed };

std::string to_string(Selection selection);
Selection parse_selection(const std::string& name);

struct SplitFractions {
  double nuisance = 0.4;
  double train = 0.3;
  double test = 0.3;
};

/// Every knob of a split-sample run. Unset optionals resolve to the
/// data-driven defaults (median-heuristic bandwidths, scale-relative ridges).
struct TestConfig {
  Index num_locations = 2;
  Index dictionary_size = 80;
  std::optional<double> tau;
  std::optional<double> gamma;
  std::optional<double> outcome_lengthscale;
  std::optional<bool> outcome_dim_normalized;
  std::optional<double> covariate_lengthscale;
  double propensity_ridge = 1e-3;
  double clip_lo = 0.01;
  double clip_hi = 0.99;
  double outcome_ridge_control = 1e-2;
  double outcome_ridge_treated = 1e-2;
  SplitFractions fractions;
  Selection selection = Selection::greedy;
  ScoreKind score = ScoreKind::dr;
  locations::CriterionKind criterion = locations::CriterionKind::whitened;
  int gradient_steps = 3;
  double gradient_step_factor = 0.1; // step length in units of the outcome lengthscale
  bool fold_train_into_nuisance = true;
  double alpha = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Disjoint, sorted index lists covering 0..n-1.
struct SplitIndices {
  std::vector<Index> nuisance;
  std::vector<Index> train;
  std::vector<Index> test;
};

/// Uniform random partition with sizes floor(f n) for the nuisance and
/// training parts; the remainder goes to the test part.
SplitIndices three_way_split(Index n, const SplitFractions& fractions, std::mt19937_64& rng);

/// Nuisances, kernel and locations learned without touching the test rows.
struct LearnedModel {
  nuisance::NuisanceFit nuisances;
  kernels::GaussianKernel outcome_kernel;
  double covariate_lengthscale = 0.0;
  LocationSet locations;
  double tau = 0.0;
  std::vector<double> ascent_trace;
};

/// Fits pi and the per-arm regressions on `nuisance_rows`.
nuisance::NuisanceFit fit_nuisances(const Dataset& nuisance_rows, const TestConfig& config,
                                    double* covariate_lengthscale = nullptr);

/// Bandwidth, nuisance fit and location learning. Reads only the rows listed in
/// `split.nuisance` and `split.train`.
LearnedModel learn_phase(const Dataset& data, const SplitIndices& split, const TestConfig& config);

/// The split used by run_drme_test, re-drawn with derived seeds (at most 10
/// attempts) until every part holds both arms.
SplitIndices draw_split(const Dataset& data, const TestConfig& config, int* attempts = nullptr);

/// Split-sample test with learned locations: nuisances on the first part,
/// locations on the second, the statistic on the third only.
TestResult run_drme_test(const Dataset& data, const TestConfig& config);

/// Learns and tests on the same pooled train+test rows. Invalid as a test;
/// kept as a diagnostic.
TestResult run_nosplit_test(const Dataset& data, const TestConfig& config);

/// Prespecified locations. The training part is merged into the nuisance part
/// when `fold_train_into_nuisance` is set.
TestResult run_fixed_location_test(const Dataset& data, const LocationSet& locations,
                                   const TestConfig& config);

/// Prespecified locations with known nuisances: every row is a test row.
TestResult run_oracle_test(const Dataset& data, const LocationSet& locations,
                           const nuisance::NuisanceFit& nuisances,
                           const kernels::GaussianKernel& outcome_kernel, const TestConfig& config);

} // namespace drme::pipeline
