#include "drme/chi2.hpp"
#include "drme/montecarlo.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace drme;
using namespace drme::mc;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.name = "small";
  spec.scenarios = {dgp::Scenario::sharp_null, dgp::Scenario::mean_shift};
  spec.methods = {Method::drme, Method::naive, Method::drme_random};
  spec.n_grid = {200};
  spec.reps = 6;
  spec.base_seed = 42;
  spec.config.dictionary_size = 20;
  spec.keep_statistics = true;
  return spec;
}

} // namespace

TEST_CASE("method names round-trip") {
  for (const Method m : {Method::drme, Method::drme_random, Method::drme_gradient, Method::ipw,
                         Method::dm, Method::naive, Method::nosplit, Method::raw_witness,
                         Method::oracle_fixed}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK(parse_method_list("drme,raw,random") ==
        std::vector<Method>{Method::drme, Method::raw_witness, Method::drme_random});
  CHECK_THROWS_AS(parse_method("xkte"), InputError);
  CHECK_THROWS_AS(parse_method_list(","), InputError);
}

TEST_CASE("report is invariant to the worker count") {
  ExperimentSpec spec = small_spec();
  spec.workers = 1;
  const ExperimentReport one = monte_carlo(spec);
  spec.workers = 3;
  const ExperimentReport three = monte_carlo(spec);
  REQUIRE(one.rows.size() == three.rows.size());
  CHECK(one.rows.size() == 6);
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    CHECK(one.rows[i].setting == three.rows[i].setting);
    CHECK(one.rows[i].method == three.rows[i].method);
    CHECK(one.rows[i].rejections == three.rows[i].rejections);
    CHECK(one.rows[i].statistics == three.rows[i].statistics);
    CHECK(one.rows[i].mean_statistic == three.rows[i].mean_statistic);
  }
}

TEST_CASE("report rows match direct replication runs") {
  const ExperimentSpec spec = small_spec();
  const ExperimentReport report = monte_carlo(spec);
  const ReportRow* row = report.find("mean_shift", "drme", 200);
  REQUIRE(row != nullptr);
  REQUIRE(row->statistics.size() == 6);
  for (int rep = 0; rep < 6; ++rep) {
    std::mt19937_64 rng(data_seed(42, dgp::Scenario::mean_shift, 200, rep));
    const Dataset data = dgp::gen_scenario(dgp::Scenario::mean_shift, 200, rng).data;
    pipeline::TestConfig config = spec.config;
    config.seed = pipeline_seed(42, dgp::Scenario::mean_shift, 200, rep);
    const TestResult r = run_method(Method::drme, data, config, std::nullopt, 0.0);
    CHECK(r.statistic == row->statistics[static_cast<std::size_t>(rep)]);
  }
  for (const auto& r : report.rows) {
    CHECK(r.rate == doctest::Approx(static_cast<double>(r.rejections) / r.reps));
    CHECK(r.se == doctest::Approx(std::sqrt(r.rate * (1.0 - r.rate) / r.reps)));
    CHECK(r.rate >= 0.0);
    CHECK(r.rate <= 1.0);
    CHECK_FALSE(r.theory.has_value());
  }
  CHECK(report.find("mean_shift", "drme", 999) == nullptr);
}

TEST_CASE("a single replication gives a rate of zero or one") {
  ExperimentSpec spec = small_spec();
  spec.reps = 1;
  for (const auto& r : monte_carlo(spec).rows) {
    CHECK((r.rate == 0.0 || r.rate == 1.0));
    CHECK(r.se == 0.0);
  }
}

TEST_CASE("seed derivation") {
  CHECK(data_seed(1, dgp::Scenario::sharp_null, 300, 0) != data_seed(1, dgp::Scenario::sharp_null, 300, 1));
  CHECK(data_seed(1, dgp::Scenario::sharp_null, 300, 0) != data_seed(1, dgp::Scenario::mean_shift, 300, 0));
  CHECK(data_seed(1, dgp::Scenario::sharp_null, 300, 0) != data_seed(2, dgp::Scenario::sharp_null, 300, 0));
  CHECK(data_seed(1, dgp::Scenario::sharp_null, 300, 0) != pipeline_seed(1, dgp::Scenario::sharp_null, 300, 0));
  CHECK(data_seed(5, dgp::Scenario::two_bump, 3000, 7) == data_seed(5, dgp::Scenario::two_bump, 3000, 7));
}

TEST_CASE("a failing replication aborts the run and names its seed") {
  ExperimentSpec spec = small_spec();
  spec.n_grid = {6};
  CHECK_THROWS_WITH_AS(monte_carlo(spec), doctest::Contains("data seed"), InputError);
  spec.reps = 0;
  CHECK_THROWS_AS(monte_carlo(spec), InputError);
}

TEST_CASE("spec validation for the oracle method") {
  ExperimentSpec spec = small_spec();
  spec.methods = {Method::oracle_fixed};
  CHECK_THROWS_AS(spec.validate(), InputError);
  spec.local_path = dgp::LocalPathSpec::reference();
  CHECK_THROWS_AS(spec.validate(), InputError); // scenarios other than the local path
  spec.scenarios = {dgp::Scenario::local_path};
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("local-path study attaches theory and keeps the statistics") {
  ExperimentSpec spec = experiment_preset("local_path");
  spec.n_grid = {400};
  spec.h_grid = {0.0, 8.0};
  spec.reps = 40;
  const ExperimentReport report = monte_carlo(spec);
  REQUIRE(report.rows.size() == 2);
  const ReportRow* null = report.find("local_path", "oracle_fixed", 400, 0.0);
  const ReportRow* alt = report.find("local_path", "oracle_fixed", 400, 8.0);
  REQUIRE(null != nullptr);
  REQUIRE(alt != nullptr);
  CHECK(null->theory.value() == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(alt->theory.value() == doctest::Approx(dgp::theory_power(8.0, 0.1383, 2, 0.05)));
  CHECK(null->statistics.size() == 40);
  CHECK(alt->mean_statistic > null->mean_statistic);
}

TEST_CASE("presets") {
  const ExperimentSpec tb = experiment_preset("two_bump");
  CHECK(tb.config.num_locations == 3);
  CHECK(tb.config.dictionary_size == 300);
  CHECK(tb.n_grid == std::vector<Index>{3000});
  CHECK(tb.reps == 200);
  const ExperimentSpec lp = experiment_preset("local_path");
  CHECK(lp.reps == 2000);
  CHECK(lp.h_grid == std::vector<double>{0, 1, 2, 3, 4, 6, 8});
  CHECK(lp.local_path.has_value());
  CHECK(experiment_preset("power").scenarios.size() == 4);
  CHECK_THROWS_AS(experiment_preset("octmnist"), InputError);
}

TEST_CASE("KS distance against a brute-force oracle") {
  std::mt19937_64 rng(3);
  std::chi_squared_distribution<double> chi2(2.0);
  std::vector<double> sample(500);
  for (auto& s : sample) s = chi2(rng);
  std::vector<double> sorted = sample;
  std::sort(sorted.begin(), sorted.end());
  double oracle = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = 1.0 - std::exp(-0.5 * sorted[i]);
    oracle = std::max(oracle, std::abs((i + 1.0) / 500.0 - f));
    oracle = std::max(oracle, std::abs(f - i / 500.0));
  }
  CHECK(ks_distance(sample, 2) == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(ks_distance(sample, 2) < 0.07);
  // A shifted law is far from the central one.
  for (auto& s : sample) s += 3.0;
  CHECK(ks_distance(sample, 2) > 0.3);
  CHECK_THROWS_AS(ks_distance({}, 2), InputError);
}

TEST_CASE("QQ points") {
  std::vector<double> sample(101);
  for (int i = 0; i <= 100; ++i) sample[static_cast<std::size_t>(i)] = i;
  const auto pts = qq_points(sample, 2, 0.5, 9);
  REQUIRE(pts.size() == 9);
  CHECK(pts[0].probability == doctest::Approx(0.1));
  CHECK(pts[0].empirical == doctest::Approx(10.0));
  CHECK(pts[4].empirical == doctest::Approx(50.0));
  CHECK(pts[4].theoretical == doctest::Approx(stats::noncentral_chi2_quantile(0.5, 2, 0.5)));
}
