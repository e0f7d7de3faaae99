#include "drme/dgp.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace drme;
using namespace drme::dgp;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double m4 = 0.0; // fourth central moment
  Index n = 0;

  double se_mean() const { return std::sqrt(var / static_cast<double>(n)); }
  double se_var() const { return std::sqrt((m4 - var * var) / static_cast<double>(n)); }
};

Moments moments(const Vector& v) {
  Moments m;
  m.n = v.size();
  m.mean = v.mean();
  const Eigen::ArrayXd c = v.array() - m.mean;
  m.var = c.square().sum() / static_cast<double>(m.n - 1);
  m.m4 = c.square().square().mean();
  return m;
}

GeneratedData draw(Scenario s, Index n, std::uint64_t seed, ScenarioParams params = {}) {
  std::mt19937_64 rng(seed);
  return gen_scenario(s, n, rng, params);
}

} // namespace

TEST_CASE("scenario names") {
  for (const Scenario s : {Scenario::sharp_null, Scenario::mean_shift, Scenario::variance_shift,
                           Scenario::localized_bump, Scenario::two_bump_null, Scenario::two_bump,
                           Scenario::local_path}) {
    CHECK(parse_scenario(to_string(s)) == s);
  }
  CHECK(parse_scenario("null") == Scenario::sharp_null);
  CHECK(parse_scenario("bump") == Scenario::localized_bump);
  CHECK_THROWS_AS(parse_scenario("nope"), InputError);
  CHECK(is_null(Scenario::sharp_null));
  CHECK(is_null(Scenario::two_bump_null));
  CHECK(is_null(Scenario::local_path, 0.0));
  CHECK_FALSE(is_null(Scenario::local_path, 2.0));
  CHECK_FALSE(is_null(Scenario::mean_shift));
}

TEST_CASE("confounded base: covariates, propensities and the prognostic function") {
  const GeneratedData g = draw(Scenario::mean_shift, 20000, 1);
  CHECK(g.data.covariate_dim() == 5);
  CHECK(g.data.outcome_dim() == 1);
  CHECK(g.propensity.minCoeff() >= 0.06);
  CHECK(g.propensity.maxCoeff() <= 0.94);
  CHECK(g.propensity.minCoeff() == 0.06);
  CHECK(g.propensity.maxCoeff() == 0.94);
  RowVector x(5);
  x << 0.5, -1.0, 2.0, 0.3, 1.2;
  const double expected = 0.90 * 0.5 + 0.60 * std::sin(-1.0) + 0.35 * (4.0 - 1.0) +
                          0.25 * 0.5 * 0.3 - 0.20 * std::cos(1.2);
  CHECK(prognostic(x) == doctest::Approx(expected).epsilon(1e-15));
  const double lin = 0.90 * 0.5 + 0.75 * 1.0 + 0.55 * 2.0 - 0.40 * 0.3;
  CHECK(true_propensity().predict(x, Arm::treated) ==
        doctest::Approx(std::clamp(1.0 / (1.0 + std::exp(-lin)), 0.06, 0.94)));
  for (Index i = 0; i < 200; ++i) {
    CHECK(g.prognostic(i) == prognostic(g.data.x.row(i)));
    CHECK(g.propensity(i) == true_propensity().predict(g.data.x.row(i), Arm::treated));
    CHECK(g.data.y(i, 0) == (g.data.a(i) == 1 ? g.y1(i, 0) : g.y0(i, 0)));
  }
  // Treatment frequency tracks the true propensity.
  const double diff = g.data.a.cast<double>().mean() - g.propensity.mean();
  CHECK(std::abs(diff) < 3.0 * std::sqrt(0.25 / 20000.0));
}

TEST_CASE("sharp null has identical potential outcomes") {
  const GeneratedData g = draw(Scenario::sharp_null, 5000, 2);
  CHECK(g.y0 == g.y1);
  const auto oracle = local_path_oracle(1.3, 0.0);
  for (const double v : {-2.0, 0.0, 1.5}) {
    CHECK(oracle.mean(Arm::treated, 0.4, v) == oracle.mean(Arm::control, 0.4, v));
  }
}

TEST_CASE("mean shift moments over 1e6 draws") {
  const GeneratedData g = draw(Scenario::mean_shift, 1000000, 3);
  const Moments m = moments(g.y1.col(0) - g.y0.col(0));
  CHECK(std::abs(m.mean - 0.35) < 3.0 * m.se_mean());
}

TEST_CASE("variance shift scales the treated noise") {
  const GeneratedData g = draw(Scenario::variance_shift, 1000000, 4);
  const Moments m1 = moments(g.y1.col(0) - g.prognostic);
  const Moments m0 = moments(g.y0.col(0) - g.prognostic);
  CHECK(std::abs(m1.var - 1.45 * 1.45) < 3.0 * m1.se_var());
  CHECK(std::abs(m0.var - 1.0) < 3.0 * m0.se_var());
  CHECK(std::abs(m1.mean) < 3.0 * m1.se_mean());
}

TEST_CASE("localized bump component has mean zero and unit variance") {
  const GeneratedData g = draw(Scenario::localized_bump, 1000000, 5);
  // Treated residual = unit noise + bump component, so mean 0 and variance 2.
  const Moments m = moments(g.y1.col(0) - g.prognostic);
  CHECK(std::abs(m.mean) < 3.0 * m.se_mean());
  CHECK(std::abs(m.var - 2.0) < 3.0 * m.se_var());
  // The component is right-skewed: third central moment (1 - 2q)/sqrt(q(1 - q)).
  const Eigen::ArrayXd c = (g.y1.col(0) - g.prognostic).array() - m.mean;
  const double q = kBumpProbability;
  CHECK(c.cube().mean() == doctest::Approx((1.0 - 2.0 * q) / std::sqrt(q * (1.0 - q))).epsilon(0.05));
  const Moments m0 = moments(g.y0.col(0) - g.prognostic);
  CHECK(std::abs(m0.var - 1.0) < 3.0 * m0.se_var());
}

TEST_CASE("two-bump directions are sparse, disjoint unit vectors") {
  for (const Index d : {2, 5, 10, 25, 50}) {
    const auto [v1, v2] = two_bump_directions(d);
    CHECK(v1.norm() == 1.0);
    CHECK(v2.norm() == 1.0);
    CHECK(v1.dot(v2) == 0.0);
    CHECK(v1(0) == 1.0);
    CHECK(v2((d + 1) / 2) == 1.0);
  }
  CHECK_THROWS_AS(two_bump_directions(1), InputError);
}

TEST_CASE("two-bump additive components are mean zero") {
  ScenarioParams params;
  params.outcome_dim = 5;
  const GeneratedData g = draw(Scenario::two_bump, 1000000, 6, params);
  CHECK(g.data.outcome_dim() == 5);
  const Vector mu = g.prognostic / std::sqrt(5.0);
  for (Index k = 0; k < 5; ++k) {
    const Moments m1 = moments(g.y1.col(k) - mu);
    const Moments m0 = moments(g.y0.col(k) - mu);
    CHECK(std::abs(m1.mean) < 3.0 * m1.se_mean());
    CHECK(std::abs(m0.mean) < 3.0 * m0.se_mean());
  }
  // Bump coordinates carry extra variance Delta^2 p (1 - p).
  const double p = kTwoBumpProbability;
  const double extra = kTwoBumpSize * kTwoBumpSize * p * (1.0 - p);
  const Moments bump = moments(g.y1.col(0) - mu);
  const Moments plain = moments(g.y1.col(1) - mu);
  CHECK(std::abs(bump.var - (1.0 + extra)) < 3.0 * bump.se_var());
  CHECK(std::abs(plain.var - 1.0) < 3.0 * plain.se_var());

  const GeneratedData null = draw(Scenario::two_bump_null, 1000, 7, params);
  CHECK(null.y0 == null.y1);
  ScenarioParams bad;
  bad.outcome_dim = 1;
  CHECK_THROWS_AS(draw(Scenario::two_bump, 10, 1, bad), InputError);
}

TEST_CASE("local path shifts the treated mean by h / sqrt(n)") {
  ScenarioParams params;
  params.h = 40.0;
  const Index n = 1000000;
  const GeneratedData g = draw(Scenario::local_path, n, 8, params);
  const Moments m = moments(g.y1.col(0) - g.y0.col(0));
  CHECK(std::abs(m.mean - 40.0 / 1000.0) < 3.0 * m.se_mean());
  const auto nuis = local_path_nuisances(1.4, 0.2);
  CHECK(nuis.is_oracle());
  CHECK(nuis.propensity.clip_lo == 0.06);
  CHECK(std::get<nuisance::OracleGaussianNuisance>(nuis.regression).shift_treated == 0.2);
}

TEST_CASE("theory curve") {
  const LocalPathSpec spec = LocalPathSpec::reference();
  CHECK(spec.locations.rows() == 2);
  CHECK(spec.locations(0, 0) == -2.6752);
  CHECK(spec.locations(1, 0) == 3.9031);
  const std::vector<double> curve = theory_curve(spec, {0.0, 3.0, 6.0}, 0.05);
  CHECK(std::abs(curve[0] - 0.05) < 1e-12);
  CHECK(std::abs(curve[1] - 0.155) < 1e-3);
  CHECK(std::abs(curve[2] - 0.502) < 1e-3);
  CHECK(theory_power(8.0, 0.1383, 2, 0.05) == doctest::Approx(0.763).epsilon(2e-3));
}

TEST_CASE("pilot localization on a small pilot") {
  std::mt19937_64 rng(9);
  const PilotResult p = pilot_localize(4000, 30, 2, std::nullopt, rng);
  CHECK(p.noncentrality > 0.0);
  CHECK(p.proxy > 0.0);
  CHECK(p.noncentrality >= p.proxy);
  CHECK(p.locations.size() == 2);
  CHECK(p.locations.indices[0] != p.locations.indices[1]);
  CHECK(p.dictionary_size == 30);
  CHECK(p.drift.size() == 2);
  const LocalPathSpec s = p.spec();
  CHECK(s.locations == p.locations.points);
  CHECK(s.lengthscale == p.lengthscale);
  std::mt19937_64 again(9);
  CHECK(pilot_localize(4000, 30, 2, std::nullopt, again).locations.points == p.locations.points);
  std::mt19937_64 r(1);
  CHECK_THROWS_AS(pilot_localize(4000, 1, 2, std::nullopt, r), InputError);
}
