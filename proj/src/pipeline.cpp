#include "drme/pipeline.hpp"

#include "drme/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>

namespace drme::pipeline {

namespace {

// Stream labels for derive_seed; every random choice in a run has its own stream.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kDictionaryStream = 2;
constexpr std::uint64_t kRandomSelectionStream = 3;
constexpr std::uint64_t kOutcomeBandwidthStream = 4;
constexpr std::uint64_t kCovariateBandwidthStream = 5;
constexpr int kMaxSplitAttempts = 10;

std::vector<Index> merge_sorted(const std::vector<Index>& a, const std::vector<Index>& b) {
  std::vector<Index> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Index count_arm(const Dataset& data, const std::vector<Index>& rows, int arm) {
  return std::count_if(rows.begin(), rows.end(), [&](Index i) { return data.a(i) == arm; });
}

bool arms_present(const Dataset& data, const std::vector<Index>& rows, Index min_per_arm) {
  return count_arm(data, rows, 0) >= min_per_arm && count_arm(data, rows, 1) >= min_per_arm;
}

// Kernel, nuisances and bandwidth from the given rows; no locations yet.
LearnedModel prepare(const Dataset& data, const std::vector<Index>& nuisance_rows,
                     const std::vector<Index>& bandwidth_rows, const TestConfig& config) {
  const Dataset nuis = data.subset(nuisance_rows);
  const Index dim = data.outcome_dim();
  const bool normalized = config.outcome_dim_normalized.value_or(kernels::default_dim_normalized(dim));
  double lengthscale = 0.0;
  if (config.outcome_lengthscale) {
    lengthscale = *config.outcome_lengthscale;
  } else {
    const Matrix pooled = data.y(bandwidth_rows, Eigen::all);
    lengthscale = kernels::median_heuristic(
        pooled, derive_seed(config.seed, {kOutcomeBandwidthStream}));
    if (normalized) {
      // The kernel divides squared distances by d, so rescale the Euclidean median.
      lengthscale /= std::sqrt(static_cast<double>(dim));
    }
  }
  LearnedModel out{.nuisances = {},
                   .outcome_kernel = kernels::GaussianKernel(lengthscale, normalized),
                   .covariate_lengthscale = 0.0,
                   .locations = {},
                   .tau = 0.0,
                   .ascent_trace = {}};
  out.nuisances = fit_nuisances(nuis, config, &out.covariate_lengthscale);
  return out;
}

TestResult evaluate(const Dataset& test_rows, const LearnedModel& model, const TestConfig& config) {
  const FeatureEngine engine(test_rows, model.nuisances, model.outcome_kernel, config.score);
  PseudoFeatureMatrix features{engine.features(model.locations.points), model.locations,
                               config.score};
  TestResult result = hotelling_test(features, config.gamma);
  result.alpha = config.alpha;
  result.reject = result.p_value <= config.alpha;
  result.tau = model.tau;
  result.outcome_lengthscale = model.outcome_kernel.lengthscale();
  result.outcome_dim_normalized = model.outcome_kernel.dim_normalized();
  result.covariate_lengthscale = model.covariate_lengthscale;
  result.outcome_ridges = {config.outcome_ridge_control, config.outcome_ridge_treated};
  result.propensity_ridge = config.propensity_ridge;
  result.propensity_converged = model.nuisances.propensity.converged;
  result.selection = to_string(config.selection);
  result.criterion = locations::to_string(config.criterion);
  result.seed = config.seed;
  return result;
}

void select_locations(LearnedModel& model, const Dataset& train, const TestConfig& config) {
  const FeatureEngine engine(train, model.nuisances, model.outcome_kernel, config.score);
  std::mt19937_64 dict_rng(derive_seed(config.seed, {kDictionaryStream}));
  const locations::Dictionary dict =
      locations::sample_dictionary(train.y, config.dictionary_size, dict_rng);
  if (dict.size() < config.num_locations) {
    throw InputError("training split too small for the requested number of locations");
  }
  const locations::DictionaryScorer scorer(dict, engine);
  model.tau = config.tau.value_or(std::max(1e-3 * scorer.mean_variance(), 1e-8));

  switch (config.selection) {
    case Selection::greedy:
      model.locations = locations::greedy_dictionary_select(dict, config.num_locations, scorer,
                                                            model.tau, config.criterion);
      break;
    case Selection::exhaustive:
      model.locations = locations::exhaustive_dictionary_select(dict, config.num_locations, scorer,
                                                                model.tau, config.criterion);
      break;
    case Selection::random: {
      std::mt19937_64 rng(derive_seed(config.seed, {kRandomSelectionStream}));
      model.locations = locations::random_select(dict, config.num_locations, rng);
      break;
    }
    case Selection::gradient: {
      const LocationSet start = locations::greedy_dictionary_select(
          dict, config.num_locations, scorer, model.tau, config.criterion);
      auto ascent = locations::gradient_ascent_optimize(
          start, config.gradient_steps,
          config.gradient_step_factor * model.outcome_kernel.lengthscale(), engine, model.tau,
          config.criterion);
      model.locations = std::move(ascent.locations);
      model.ascent_trace = std::move(ascent.trace);
      break;
    }
    case Selection::fixed:
      throw InputError("fixed selection has no learning step; use run_fixed_location_test");
  }
}

} // namespace

std::string to_string(Selection selection) {
  switch (selection) {
    case Selection::greedy: return "greedy";
    case Selection::exhaustive: return "exhaustive";
    case Selection::gradient: return "gradient";
    case Selection::random: return "random";
    case Selection::fixed: return "fixed";
  }
  return "unknown";
}

Selection parse_selection(const std::string& name) {
  if (name == "greedy") return Selection::greedy;
  if (name == "exhaustive") return Selection::exhaustive;
  if (name == "gradient") return Selection::gradient;
  if (name == "random") return Selection::random;
  if (name == "fixed") return Selection::fixed;
  throw InputError("unknown selection method '" + name + "'");
}

void TestConfig::validate() const {
  if (num_locations < 1) {
    throw InputError("config: J must be at least 1");
  }
  if (dictionary_size < num_locations && selection != Selection::fixed) {
    throw InputError("config: J must not exceed the dictionary size M");
  }
  if (!(fractions.nuisance > 0.0 && fractions.train > 0.0 && fractions.test > 0.0)) {
    throw InputError("config: split fractions must be positive");
  }
  if (std::abs(fractions.nuisance + fractions.train + fractions.test - 1.0) > 1e-9) {
    throw InputError("config: split fractions must sum to 1");
  }
  if (tau && !(*tau > 0.0)) throw InputError("config: tau must be positive");
  if (gamma && !(*gamma > 0.0)) throw InputError("config: gamma must be positive");
  if (outcome_lengthscale && !(*outcome_lengthscale > 0.0)) {
    throw InputError("config: outcome lengthscale must be positive");
  }
  if (covariate_lengthscale && !(*covariate_lengthscale > 0.0)) {
    throw InputError("config: covariate lengthscale must be positive");
  }
  if (!(outcome_ridge_control > 0.0 && outcome_ridge_treated > 0.0)) {
    throw InputError("config: outcome ridges must be positive");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("config: alpha must lie in (0, 1)");
  if (gradient_steps < 0) throw InputError("config: gradient steps must be nonnegative");
}

SplitIndices three_way_split(Index n, const SplitFractions& fractions, std::mt19937_64& rng) {
  if (n < 6) {
    throw InputError("three_way_split: need at least 6 units");
  }
  const double total = fractions.nuisance + fractions.train + fractions.test;
  if (!(fractions.nuisance > 0.0 && fractions.train > 0.0 && fractions.test > 0.0) ||
      std::abs(total - 1.0) > 1e-9) {
    throw InputError("three_way_split: fractions must be positive and sum to 1");
  }
  const auto n_nuis = static_cast<Index>(std::floor(fractions.nuisance * static_cast<double>(n)));
  const auto n_train = static_cast<Index>(std::floor(fractions.train * static_cast<double>(n)));
  const Index n_test = n - n_nuis - n_train;
  if (n_nuis < 1 || n_train < 1 || n_test < 1) {
    throw InputError("three_way_split: a split part would be empty");
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  SplitIndices out;
  const auto begin = order.begin();
  out.nuisance.assign(begin, begin + n_nuis);
  out.train.assign(begin + n_nuis, begin + n_nuis + n_train);
  out.test.assign(begin + n_nuis + n_train, order.end());
  std::sort(out.nuisance.begin(), out.nuisance.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

nuisance::NuisanceFit fit_nuisances(const Dataset& nuisance_rows, const TestConfig& config,
                                    double* covariate_lengthscale) {
  nuisance::NuisanceFit fit;
  nuisance::PropensityOptions options;
  options.ridge = config.propensity_ridge;
  options.clip_lo = config.clip_lo;
  options.clip_hi = config.clip_hi;
  fit.propensity = nuisance::fit_propensity(nuisance_rows.x, nuisance_rows.a, options);

  if (config.score == ScoreKind::dr || config.score == ScoreKind::dm) {
    const double ls = config.covariate_lengthscale
                          ? *config.covariate_lengthscale
                          : kernels::median_heuristic(
                                nuisance_rows.x, derive_seed(config.seed, {kCovariateBandwidthStream}));
    if (covariate_lengthscale != nullptr) {
      *covariate_lengthscale = ls;
    }
    fit.regression = nuisance::fit_outcome_regression(
        nuisance_rows.x, nuisance_rows.a, nuisance_rows.y, kernels::GaussianKernel(ls),
        config.outcome_ridge_control, config.outcome_ridge_treated);
  }
  return fit;
}

SplitIndices draw_split(const Dataset& data, const TestConfig& config, int* attempts) {
  for (int attempt = 0; attempt < kMaxSplitAttempts; ++attempt) {
    std::mt19937_64 rng(derive_seed(config.seed, {kSplitStream, static_cast<std::uint64_t>(attempt)}));
    SplitIndices split = three_way_split(data.size(), config.fractions, rng);
    if (arms_present(data, split.nuisance, 2) && arms_present(data, split.train, 1) &&
        arms_present(data, split.test, 1)) {
      if (attempts != nullptr) {
        *attempts = attempt + 1;
      }
      return split;
    }
  }
  throw InputError("degenerate split: a treatment arm is missing after 10 re-splits");
}

LearnedModel learn_phase(const Dataset& data, const SplitIndices& split, const TestConfig& config) {
  config.validate();
  LearnedModel model =
      prepare(data, split.nuisance, merge_sorted(split.nuisance, split.train), config);
  select_locations(model, data.subset(split.train), config);
  return model;
}

TestResult run_drme_test(const Dataset& data, const TestConfig& config) {
  data.validate();
  config.validate();
  int attempts = 0;
  const SplitIndices split = draw_split(data, config, &attempts);
  const LearnedModel model = learn_phase(data, split, config);
  TestResult result = evaluate(data.subset(split.test), model, config);
  result.n_nuisance = static_cast<Index>(split.nuisance.size());
  result.n_train = static_cast<Index>(split.train.size());
  result.test_indices = split.test;
  result.split_attempts = attempts;
  return result;
}

TestResult run_nosplit_test(const Dataset& data, const TestConfig& config) {
  data.validate();
  config.validate();
  int attempts = 0;
  const SplitIndices split = draw_split(data, config, &attempts);
  const std::vector<Index> pooled = merge_sorted(split.train, split.test);
  const SplitIndices learning{split.nuisance, pooled, {}};
  const LearnedModel model = learn_phase(data, learning, config);
  TestResult result = evaluate(data.subset(pooled), model, config);
  result.diagnostic_only = true;
  result.n_nuisance = static_cast<Index>(split.nuisance.size());
  result.n_train = static_cast<Index>(pooled.size());
  result.test_indices = pooled;
  result.split_attempts = attempts;
  return result;
}

TestResult run_fixed_location_test(const Dataset& data, const LocationSet& locations,
                                   const TestConfig& config) {
  data.validate();
  config.validate();
  if (locations.size() < 1 || locations.points.cols() != data.outcome_dim()) {
    throw InputError("fixed locations must be nonempty and match the outcome dimension");
  }
  int attempts = 0;
  const SplitIndices split = draw_split(data, config, &attempts);
  const std::vector<Index> nuisance_rows =
      config.fold_train_into_nuisance ? merge_sorted(split.nuisance, split.train) : split.nuisance;
  LearnedModel model =
      prepare(data, nuisance_rows, merge_sorted(split.nuisance, split.train), config);
  model.locations = locations;
  TestResult result = evaluate(data.subset(split.test), model, config);
  result.selection = to_string(Selection::fixed);
  result.n_nuisance = static_cast<Index>(nuisance_rows.size());
  result.n_train = config.fold_train_into_nuisance ? 0 : static_cast<Index>(split.train.size());
  result.test_indices = split.test;
  result.split_attempts = attempts;
  return result;
}

TestResult run_oracle_test(const Dataset& data, const LocationSet& locations,
                           const nuisance::NuisanceFit& nuisances,
                           const kernels::GaussianKernel& outcome_kernel, const TestConfig& config) {
  data.validate();
  const FeatureEngine engine(data, nuisances, outcome_kernel, config.score);
  PseudoFeatureMatrix features{engine.features(locations.points), locations, config.score};
  TestResult result = hotelling_test(features, config.gamma);
  result.alpha = config.alpha;
  result.reject = result.p_value <= config.alpha;
  result.outcome_lengthscale = outcome_kernel.lengthscale();
  result.outcome_dim_normalized = outcome_kernel.dim_normalized();
  result.selection = to_string(Selection::fixed);
  result.criterion = locations::to_string(config.criterion);
  result.seed = config.seed;
  result.test_indices.resize(static_cast<std::size_t>(data.size()));
  std::iota(result.test_indices.begin(), result.test_indices.end(), Index{0});
  return result;
}

} // namespace drme::pipeline
