#include "drme/serialize.hpp"

#include <cstdio>
#include <sstream>

namespace drme::io {

namespace {

template <typename T>
Json optional_json(const std::optional<T>& value) {
  return value ? Json(*value) : Json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) {
    return std::nullopt;
  }
  return j.at(key).get<T>();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

} // namespace

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const LocationSet& locations) {
  Json j;
  j["points"] = to_json(locations.points);
  j["provenance"] = to_string(locations.provenance);
  j["dictionary_indices"] = locations.indices;
  return j;
}

Json to_json(const TestResult& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["statistic"] = r.statistic;
  j["df"] = r.df;
  j["p_value"] = r.p_value;
  j["alpha"] = r.alpha;
  j["reject"] = r.reject;
  j["diagnostic_only"] = r.diagnostic_only;
  j["locations"] = to_json(r.locations);
  j["mean"] = std::vector<double>(r.mean.data(), r.mean.data() + r.mean.size());
  j["covariance"] = to_json(r.covariance);
  j["n_test"] = r.n_test;
  j["n_train"] = r.n_train;
  j["n_nuisance"] = r.n_nuisance;
  j["split_attempts"] = r.split_attempts;
  j["gamma"] = r.gamma;
  j["tau"] = r.tau;
  j["score"] = to_string(r.score);
  j["selection"] = r.selection;
  j["criterion"] = r.criterion;
  j["outcome_lengthscale"] = r.outcome_lengthscale;
  j["outcome_dim_normalized"] = r.outcome_dim_normalized;
  j["covariate_lengthscale"] = r.covariate_lengthscale;
  j["outcome_ridges"] = {r.outcome_ridges[0], r.outcome_ridges[1]};
  j["propensity_ridge"] = r.propensity_ridge;
  j["propensity_converged"] = r.propensity_converged;
  j["seed"] = r.seed;
  j["test_indices"] = r.test_indices;
  return j;
}

Json to_json(const pipeline::TestConfig& c) {
  Json j;
  j["num_locations"] = c.num_locations;
  j["dictionary_size"] = c.dictionary_size;
  j["tau"] = optional_json(c.tau);
  j["gamma"] = optional_json(c.gamma);
  j["outcome_lengthscale"] = optional_json(c.outcome_lengthscale);
  j["outcome_dim_normalized"] = optional_json(c.outcome_dim_normalized);
  j["covariate_lengthscale"] = optional_json(c.covariate_lengthscale);
  j["propensity_ridge"] = c.propensity_ridge;
  j["clip_lo"] = c.clip_lo;
  j["clip_hi"] = c.clip_hi;
  j["outcome_ridge_control"] = c.outcome_ridge_control;
  j["outcome_ridge_treated"] = c.outcome_ridge_treated;
  j["fractions"] = {c.fractions.nuisance, c.fractions.train, c.fractions.test};
  j["selection"] = pipeline::to_string(c.selection);
  j["score"] = to_string(c.score);
  j["criterion"] = locations::to_string(c.criterion);
  j["gradient_steps"] = c.gradient_steps;
  j["gradient_step_factor"] = c.gradient_step_factor;
  j["fold_train_into_nuisance"] = c.fold_train_into_nuisance;
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  return j;
}

pipeline::TestConfig config_from_json(const Json& j) {
  pipeline::TestConfig c;
  try {
    c.num_locations = j.at("num_locations").get<Index>();
    c.dictionary_size = j.at("dictionary_size").get<Index>();
    c.tau = optional_from<double>(j, "tau");
    c.gamma = optional_from<double>(j, "gamma");
    c.outcome_lengthscale = optional_from<double>(j, "outcome_lengthscale");
    c.outcome_dim_normalized = optional_from<bool>(j, "outcome_dim_normalized");
    c.covariate_lengthscale = optional_from<double>(j, "covariate_lengthscale");
    c.propensity_ridge = j.at("propensity_ridge").get<double>();
    c.clip_lo = j.at("clip_lo").get<double>();
    c.clip_hi = j.at("clip_hi").get<double>();
    c.outcome_ridge_control = j.at("outcome_ridge_control").get<double>();
    c.outcome_ridge_treated = j.at("outcome_ridge_treated").get<double>();
    const auto& f = j.at("fractions");
    c.fractions = {f.at(0).get<double>(), f.at(1).get<double>(), f.at(2).get<double>()};
    c.selection = pipeline::parse_selection(j.at("selection").get<std::string>());
    c.score = parse_score_kind(j.at("score").get<std::string>());
    c.criterion = locations::parse_criterion_kind(j.at("criterion").get<std::string>());
    c.gradient_steps = j.at("gradient_steps").get<int>();
    c.gradient_step_factor = j.at("gradient_step_factor").get<double>();
    c.fold_train_into_nuisance = j.at("fold_train_into_nuisance").get<bool>();
    c.alpha = j.at("alpha").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed config: ") + e.what());
  }
  return c;
}

Json to_json(const dgp::LocalPathSpec& spec) {
  Json j;
  j["locations"] = to_json(spec.locations);
  j["lengthscale"] = spec.lengthscale;
  j["noncentrality"] = spec.noncentrality;
  j["noise_sd"] = spec.noise_sd;
  return j;
}

Json to_json(const dgp::PilotResult& p) {
  Json j;
  j["locations"] = to_json(p.locations);
  j["lengthscale"] = p.lengthscale;
  j["noncentrality"] = p.noncentrality;
  j["proxy"] = p.proxy;
  j["tau"] = p.tau;
  j["drift"] = std::vector<double>(p.drift.data(), p.drift.data() + p.drift.size());
  j["covariance"] = to_json(p.covariance);
  j["n_pilot"] = p.n_pilot;
  j["dictionary_size"] = p.dictionary_size;
  return j;
}

Json to_json(const mc::ExperimentReport& report) {
  Json j;
  j["schema_version"] = mc::ExperimentReport::kSchemaVersion;
  j["experiment"] = report.name;
  j["seed"] = report.seed;
  j["reps"] = report.reps;
  j["alpha"] = report.alpha;
  if (report.pilot) {
    j["pilot"] = to_json(*report.pilot);
  }
  if (report.local_path) {
    j["local_path"] = to_json(*report.local_path);
  }
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json row;
    row["setting"] = r.setting;
    row["method"] = r.method;
    row["n"] = r.n;
    row["h"] = r.h;
    row["reps"] = r.reps;
    row["rejections"] = r.rejections;
    row["rate"] = r.rate;
    row["se"] = r.se;
    row["mean_statistic"] = r.mean_statistic;
    row["theory"] = optional_json(r.theory);
    if (!r.statistics.empty()) {
      row["statistics"] = r.statistics;
    }
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j;
}

std::string report_csv(const mc::ExperimentReport& report) {
  std::ostringstream out;
  out << "setting,method,n,h,reps,rejections,rate,se,mean_statistic,theory\n";
  for (const auto& r : report.rows) {
    out << r.setting << ',' << r.method << ',' << r.n << ',' << num(r.h) << ',' << r.reps << ','
        << r.rejections << ',' << num(r.rate) << ',' << num(r.se) << ',' << num(r.mean_statistic)
        << ',' << (r.theory ? num(*r.theory) : std::string()) << '\n';
  }
  return out.str();
}

std::string plot_data_csv(const mc::ExperimentReport& report) {
  std::ostringstream out;
  out << "series,x,rate,lower,upper\n";
  for (const auto& r : report.rows) {
    const bool by_h = r.setting == "local_path";
    const std::string series = r.setting + "/" + r.method + (by_h ? "/n=" + std::to_string(r.n) : "");
    const double x = by_h ? r.h : static_cast<double>(r.n);
    out << series << ',' << num(x) << ',' << num(r.rate) << ',' << num(r.rate - 1.96 * r.se) << ','
        << num(r.rate + 1.96 * r.se) << '\n';
    if (by_h && r.theory) {
      out << "theory/n=" << r.n << ',' << num(x) << ',' << num(*r.theory) << ",,\n";
    }
  }
  return out.str();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

} // namespace drme::io
