#include "drme/montecarlo.hpp"

#include "drme/chi2.hpp"
#include "drme/seeding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace drme::mc {

namespace {

constexpr std::uint64_t kDataStream = 11;
constexpr std::uint64_t kPipelineStream = 12;

struct Task {
  dgp::Scenario scenario;
  Index n;
  double h;
  int rep;
};

struct Outcome {
  double statistic = 0.0;
  bool reject = false;
};

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

bool varies_h(dgp::Scenario s) { return s == dgp::Scenario::local_path; }

} // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::drme: return "drme";
    case Method::drme_random: return "drme_random";
    case Method::drme_gradient: return "drme_gradient";
    case Method::ipw: return "ipw";
    case Method::dm: return "dm";
    case Method::naive: return "naive";
    case Method::nosplit: return "nosplit";
    case Method::raw_witness: return "raw_witness";
    case Method::oracle_fixed: return "oracle_fixed";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "drme") return Method::drme;
  if (name == "drme_random" || name == "random") return Method::drme_random;
  if (name == "drme_gradient" || name == "gradient") return Method::drme_gradient;
  if (name == "ipw") return Method::ipw;
  if (name == "dm") return Method::dm;
  if (name == "naive") return Method::naive;
  if (name == "nosplit") return Method::nosplit;
  if (name == "raw_witness" || name == "raw") return Method::raw_witness;
  if (name == "oracle_fixed" || name == "oracle") return Method::oracle_fixed;
  throw InputError("unknown method '" + name + "'");
}

std::vector<Method> parse_method_list(const std::string& comma_separated) {
  std::vector<Method> out;
  for (const auto& name : split_commas(comma_separated)) {
    out.push_back(parse_method(name));
  }
  if (out.empty()) {
    throw InputError("empty method list");
  }
  return out;
}

void ExperimentSpec::validate() const {
  if (reps < 1) throw InputError("reps must be at least 1");
  if (scenarios.empty() || methods.empty() || n_grid.empty() || h_grid.empty()) {
    throw InputError("experiment needs scenarios, methods, n and h values");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  for (const Index n : n_grid) {
    if (n < 6) throw InputError("sample sizes must be at least 6");
  }
  const bool oracle = std::find(methods.begin(), methods.end(), Method::oracle_fixed) != methods.end();
  if (oracle) {
    if (!local_path) throw InputError("oracle_fixed needs frozen local-path locations");
    for (const auto s : scenarios) {
      if (s != dgp::Scenario::local_path) {
        throw InputError("oracle_fixed applies to the local_path scenario only");
      }
    }
  }
  config.validate();
}

const ReportRow* ExperimentReport::find(const std::string& setting, const std::string& method,
                                        Index n, double h) const {
  for (const auto& row : rows) {
    if (row.setting == setting && row.method == method && row.n == n && row.h == h) {
      return &row;
    }
  }
  return nullptr;
}

ExperimentSpec experiment_preset(const std::string& name) {
  using dgp::Scenario;
  ExperimentSpec spec;
  spec.name = name;
  const std::vector<Index> n_grid{300, 600, 1200, 3000};
  const std::vector<Method> baselines{Method::drme, Method::drme_random, Method::ipw,
                                      Method::dm,   Method::naive,       Method::nosplit};
  if (name == "sharp_null") {
    spec.scenarios = {Scenario::sharp_null};
    spec.methods = baselines;
    spec.n_grid = n_grid;
  } else if (name == "power") {
    spec.scenarios = {Scenario::sharp_null, Scenario::mean_shift, Scenario::variance_shift,
                      Scenario::localized_bump};
    spec.methods = baselines;
    spec.n_grid = n_grid;
  } else if (name == "mean_shift" || name == "variance_shift" || name == "localized_bump") {
    spec.scenarios = {dgp::parse_scenario(name)};
    spec.methods = {Method::drme, Method::drme_random};
    spec.n_grid = n_grid;
  } else if (name == "two_bump") {
    spec.scenarios = {Scenario::two_bump_null, Scenario::two_bump};
    spec.methods = {Method::drme, Method::raw_witness, Method::drme_random};
    spec.n_grid = {3000};
    spec.config.num_locations = 3;
    spec.config.dictionary_size = 300;
  } else if (name == "local_path") {
    spec.scenarios = {Scenario::local_path};
    spec.methods = {Method::oracle_fixed};
    spec.n_grid = {500, 1000, 3000};
    spec.h_grid = {0, 1, 2, 3, 4, 6, 8};
    spec.reps = 2000;
    spec.local_path = dgp::LocalPathSpec::reference();
    spec.keep_statistics = true;
  } else {
    throw InputError("unknown experiment '" + name + "'");
  }
  return spec;
}

std::uint64_t data_seed(std::uint64_t base, dgp::Scenario scenario, Index n, int rep) {
  return derive_seed(base, {kDataStream, static_cast<std::uint64_t>(scenario),
                            static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)});
}

std::uint64_t pipeline_seed(std::uint64_t base, dgp::Scenario scenario, Index n, int rep) {
  return derive_seed(base, {kPipelineStream, static_cast<std::uint64_t>(scenario),
                            static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)});
}

TestResult run_method(Method method, const Dataset& data, const pipeline::TestConfig& base,
                      const std::optional<dgp::LocalPathSpec>& local_path, double delta) {
  pipeline::TestConfig config = base;
  switch (method) {
    case Method::drme:
      return pipeline::run_drme_test(data, config);
    case Method::drme_random:
      config.selection = pipeline::Selection::random;
      return pipeline::run_drme_test(data, config);
    case Method::drme_gradient:
      config.selection = pipeline::Selection::gradient;
      return pipeline::run_drme_test(data, config);
    case Method::ipw:
      config.score = ScoreKind::ipw;
      return pipeline::run_drme_test(data, config);
    case Method::dm:
      config.score = ScoreKind::dm;
      return pipeline::run_drme_test(data, config);
    case Method::naive:
      config.score = ScoreKind::naive;
      return pipeline::run_drme_test(data, config);
    case Method::nosplit:
      return pipeline::run_nosplit_test(data, config);
    case Method::raw_witness:
      config.criterion = locations::CriterionKind::raw_witness;
      return pipeline::run_drme_test(data, config);
    case Method::oracle_fixed: {
      if (!local_path) {
        throw InputError("oracle_fixed needs frozen local-path locations");
      }
      const nuisance::NuisanceFit nuisances =
          dgp::local_path_nuisances(local_path->lengthscale, delta);
      LocationSet v;
      v.points = local_path->locations;
      v.provenance = LocationSet::Provenance::fixed;
      return pipeline::run_oracle_test(data, v, nuisances,
                                       kernels::GaussianKernel(local_path->lengthscale), config);
    }
  }
  throw InputError("unknown method");
}

ExperimentReport monte_carlo(const ExperimentSpec& spec) {
  spec.validate();

  std::vector<Task> tasks;
  for (const auto scenario : spec.scenarios) {
    const std::vector<double> hs = varies_h(scenario) ? spec.h_grid : std::vector<double>{0.0};
    for (const Index n : spec.n_grid) {
      for (const double h : hs) {
        for (int rep = 0; rep < spec.reps; ++rep) {
          tasks.push_back({scenario, n, h, rep});
        }
      }
    }
  }
  const std::size_t n_methods = spec.methods.size();
  std::vector<Outcome> outcomes(tasks.size() * n_methods);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::size_t error_task = tasks.size();
  std::string error_message;
  bool error_is_input = false;
  bool error_is_numeric = false;

  auto worker = [&]() {
    while (!failed.load()) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) {
        return;
      }
      const Task& task = tasks[t];
      const std::uint64_t dseed = data_seed(spec.base_seed, task.scenario, task.n, task.rep);
      try {
        std::mt19937_64 rng(dseed);
        dgp::ScenarioParams params;
        params.outcome_dim = spec.outcome_dim;
        params.h = task.h;
        const dgp::GeneratedData generated = dgp::gen_scenario(task.scenario, task.n, rng, params);
        pipeline::TestConfig config = spec.config;
        config.alpha = spec.alpha;
        config.seed = pipeline_seed(spec.base_seed, task.scenario, task.n, task.rep);
        const double delta = task.h / std::sqrt(static_cast<double>(task.n));
        for (std::size_t m = 0; m < n_methods; ++m) {
          const TestResult r =
              run_method(spec.methods[m], generated.data, config, spec.local_path, delta);
          outcomes[t * n_methods + m] = {r.statistic, r.reject};
        }
      } catch (const std::exception& e) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (t < error_task) {
          error_task = t;
          std::ostringstream msg;
          msg << "replication failed (scenario " << dgp::to_string(task.scenario) << ", n "
              << task.n << ", h " << task.h << ", rep " << task.rep << ", data seed " << dseed
              << "): " << e.what();
          error_message = msg.str();
          error_is_input = dynamic_cast<const InputError*>(&e) != nullptr;
          error_is_numeric = dynamic_cast<const NumericError*>(&e) != nullptr;
        }
        failed.store(true);
      }
    }
  };

  const unsigned count =
      std::max(1u, std::min<unsigned>(spec.workers, static_cast<unsigned>(tasks.size())));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(count);
    for (unsigned w = 0; w < count; ++w) {
      threads.emplace_back(worker);
    }
    for (auto& th : threads) {
      th.join();
    }
  }
  if (failed.load()) {
    if (error_is_input) throw InputError(error_message);
    if (error_is_numeric) throw NumericError(error_message);
    throw std::runtime_error(error_message);
  }

  ExperimentReport report;
  report.name = spec.name;
  report.seed = spec.base_seed;
  report.reps = spec.reps;
  report.alpha = spec.alpha;
  report.workers = spec.workers;
  report.local_path = spec.local_path;

  // Tasks are laid out as contiguous blocks of `reps` replications.
  for (std::size_t start = 0; start < tasks.size(); start += static_cast<std::size_t>(spec.reps)) {
    const Task& head = tasks[start];
    for (std::size_t m = 0; m < n_methods; ++m) {
      ReportRow row;
      row.setting = dgp::to_string(head.scenario);
      row.method = to_string(spec.methods[m]);
      row.n = head.n;
      row.h = head.h;
      row.reps = spec.reps;
      double sum = 0.0;
      for (int rep = 0; rep < spec.reps; ++rep) {
        const Outcome& o = outcomes[(start + static_cast<std::size_t>(rep)) * n_methods + m];
        row.rejections += o.reject ? 1 : 0;
        sum += o.statistic;
        if (spec.keep_statistics) {
          row.statistics.push_back(o.statistic);
        }
      }
      row.rate = static_cast<double>(row.rejections) / spec.reps;
      row.se = std::sqrt(row.rate * (1.0 - row.rate) / spec.reps);
      row.mean_statistic = sum / spec.reps;
      if (spec.methods[m] == Method::oracle_fixed && spec.local_path) {
        row.theory = dgp::theory_power(head.h, spec.local_path->noncentrality,
                                       static_cast<int>(spec.local_path->locations.rows()),
                                       spec.alpha);
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

double ks_distance(std::vector<double> sample, int df, double nc) {
  if (sample.empty()) {
    throw InputError("ks_distance: empty sample");
  }
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = stats::noncentral_chi2_cdf(std::max(0.0, sample[i]), df, nc);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

std::vector<QQPoint> qq_points(std::vector<double> sample, int df, double nc, int points) {
  if (sample.empty() || points < 1) {
    throw InputError("qq_points: empty sample");
  }
  std::sort(sample.begin(), sample.end());
  std::vector<QQPoint> out;
  const auto n = sample.size();
  for (int k = 1; k <= points; ++k) {
    const double p = static_cast<double>(k) / (points + 1);
    // Type-7 sample quantile.
    const double pos = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    const double emp = sample[lo] + frac * (sample[hi] - sample[lo]);
    out.push_back({p, emp, stats::noncentral_chi2_quantile(p, df, nc)});
  }
  return out;
}

} // namespace drme::mc
