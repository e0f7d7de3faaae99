#pragma once

#include "drme/dgp.hpp"
#include "drme/pipeline.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drme::mc {

/// Test variants compared in the simulation studies.
///   drme          split-sample DR test, whitened greedy selection
///   drme_random   same statistic, random dictionary locations
///   drme_gradient greedy start refined by gradient ascent
///   ipw, dm       plug-in scores without augmentation / without weighting
///   naive         unadjusted two-sample contrast
///   nosplit       learns and tests on the same rows (diagnostic)
///   raw_witness   selection by |mean|^2 instead of the whitened criterion
///   oracle_fixed  frozen locations with the true nuisances (local path only)
enum class Method { drme, drme_random, drme_gradient, ipw, dm, naive, nosplit, raw_witness, oracle_fixed };

std::string to_string(Method method);
Method parse_method(const std::string& name);
std::vector<Method> parse_method_list(const std::string& comma_separated);

struct ExperimentSpec {
  std::string name;
  std::vector<dgp::Scenario> scenarios;
  std::vector<Method> methods;
  std::vector<Index> n_grid;
  std::vector<double> h_grid{0.0}; // only the local path varies h
  Index outcome_dim = 5;
  int reps = 200;
  double alpha = 0.05;
  std::uint64_t base_seed = 0;
  pipeline::TestConfig config;                  // per-rep seed is filled in
  std::optional<dgp::LocalPathSpec> local_path; // frozen locations for oracle_fixed
  unsigned workers = 1;
  bool keep_statistics = false;

  void validate() const;
};

struct ReportRow {
  std::string setting;
  std::string method;
  Index n = 0;
  double h = 0.0;
  int reps = 0;
  int rejections = 0;
  double rate = 0.0;
  double se = 0.0;
  double mean_statistic = 0.0;
  std::optional<double> theory;
  std::vector<double> statistics; // per rep, kept when requested
};

struct ExperimentReport {
  static constexpr int kSchemaVersion = 1;
  std::string name;
  std::uint64_t seed = 0;
  int reps = 0;
  double alpha = 0.05;
  unsigned workers = 1;
  std::vector<ReportRow> rows;
  std::optional<dgp::PilotResult> pilot;
  std::optional<dgp::LocalPathSpec> local_path;

  const ReportRow* find(const std::string& setting, const std::string& method, Index n,
                        double h = 0.0) const;
};

/// Defaults for a named study: sharp_null, power, mean_shift, variance_shift,
/// localized_bump, two_bump, local_path.
ExperimentSpec experiment_preset(const std::string& name);

/// Seed of the data stream for one replication; shared by every method.
std::uint64_t data_seed(std::uint64_t base, dgp::Scenario scenario, Index n, int rep);
/// Seed of the split/dictionary streams for one replication; shared by every method.
std::uint64_t pipeline_seed(std::uint64_t base, dgp::Scenario scenario, Index n, int rep);

/// One method on one dataset. `delta` is the treated shift of the local path,
/// read only by oracle_fixed.
TestResult run_method(Method method, const Dataset& data, const pipeline::TestConfig& config,
                      const std::optional<dgp::LocalPathSpec>& local_path, double delta);

/// Rejection rates for every (scenario, n, h, method). Replications run on
/// `workers` threads; results are stored by replication index so the report
/// does not depend on the worker count. A failing replication aborts the run
/// and its seed is named in the error.
ExperimentReport monte_carlo(const ExperimentSpec& spec);

/// sup |F_emp - F_{chi2_df(nc)}|.
double ks_distance(std::vector<double> sample, int df, double nc = 0.0);

struct QQPoint {
  double probability;
  double empirical;
  double theoretical;
};

/// Empirical quantiles against noncentral chi-square quantiles at `points` levels.
std::vector<QQPoint> qq_points(std::vector<double> sample, int df, double nc, int points = 99);

} // namespace drme::mc
