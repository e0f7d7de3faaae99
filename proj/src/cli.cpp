#include "drme/cli.hpp"

#include "drme/csv_input.hpp"
#include "drme/seeding.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace drme::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kPilotStream = 21;

void write_text(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw InputError("cannot write '" + path + "'");
  }
  f << text;
}

io::Json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    throw InputError("cannot open '" + path + "'");
  }
  try {
    return io::Json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed JSON in '" + path + "': " + e.what());
  }
}

io::Json manifest_header(const std::string& subcommand, std::uint64_t seed) {
  io::Json j;
  j["schema_version"] = io::kSchemaVersion;
  j["tool"] = "drme";
  j["version"] = DRME_VERSION;
  j["subcommand"] = subcommand;
  j["seed"] = seed;
  return j;
}

std::string redirect(const std::string& path, const std::string& out_dir) {
  if (out_dir.empty()) {
    return path;
  }
  return (fs::path(out_dir) / fs::path(path).filename()).string();
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string manifest_path_for(const std::string& output) {
  fs::path p(output);
  if (p.extension() == ".json") {
    p.replace_extension();
  }
  return p.string() + ".manifest.json";
}

// Optional overrides of TestConfig fields exposed as flags.
struct ConfigFlags {
  Index num_locations = 0;
  Index dictionary_size = 0;
  double tau = 0.0;
  double gamma = 0.0;
  double outcome_lengthscale = 0.0;
  double covariate_lengthscale = 0.0;
  bool dim_normalized = false;
  double propensity_ridge = 0.0;
  double clip_lo = 0.0;
  double clip_hi = 0.0;
  double ridge_control = 0.0;
  double ridge_treated = 0.0;
  std::vector<double> fractions;
  std::string selection;
  std::string score;
  std::string criterion;
  int gradient_steps = 0;
  double gradient_step_factor = 0.0;
  bool no_fold = false;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, CLI::Option*> options;

  void add(CLI::App* app, bool with_seed) {
    options["J"] = app->add_option("--J,--locations", num_locations, "number of test locations J");
    options["M"] = app->add_option("--M,--dictionary", dictionary_size, "dictionary size M");
    options["tau"] = app->add_option("--tau", tau, "learning ridge (default: relative to feature scale)");
    options["gamma"] = app->add_option("--gamma", gamma, "test ridge (default: relative to feature scale)");
    options["ly"] = app->add_option("--outcome-lengthscale", outcome_lengthscale,
                                    "outcome kernel lengthscale (default: median heuristic)");
    options["lx"] = app->add_option("--covariate-lengthscale", covariate_lengthscale,
                                    "covariate kernel lengthscale (default: median heuristic)");
    options["dimnorm"] = app->add_option("--dim-normalized", dim_normalized,
                                         "divide squared outcome distances by d (true/false)");
    options["pridge"] = app->add_option("--propensity-ridge", propensity_ridge);
    options["clip_lo"] = app->add_option("--clip-lo", clip_lo, "lower propensity clip");
    options["clip_hi"] = app->add_option("--clip-hi", clip_hi, "upper propensity clip");
    options["r0"] = app->add_option("--ridge0", ridge_control, "outcome regression ridge, control arm");
    options["r1"] = app->add_option("--ridge1", ridge_treated, "outcome regression ridge, treated arm");
    options["fractions"] = app->add_option("--fractions", fractions, "nuisance,train,test fractions")
                               ->delimiter(',')
                               ->expected(3);
    options["selection"] = app->add_option("--selection", selection,
                                           "greedy | exhaustive | gradient | random");
    options["score"] = app->add_option("--score", score, "dr | ipw | dm | naive");
    options["criterion"] = app->add_option("--criterion", criterion, "whitened | raw_witness");
    options["steps"] = app->add_option("--gradient-steps", gradient_steps);
    options["step_factor"] = app->add_option("--gradient-step", gradient_step_factor,
                                             "ascent step in units of the outcome lengthscale");
    options["no_fold"] = app->add_flag("--no-fold", no_fold,
                                       "fixed locations: keep the training part out of nuisance fitting");
    options["alpha"] = app->add_option("--alpha", alpha, "test level");
    if (with_seed) {
      options["seed"] = app->add_option("--seed", seed, "base seed (default: $DRME_SEED or 0)");
    }
  }

  bool set(const std::string& key) const {
    const auto it = options.find(key);
    return it != options.end() && it->second->count() > 0;
  }

  void apply(pipeline::TestConfig& c) const {
    if (set("J")) c.num_locations = num_locations;
    if (set("M")) c.dictionary_size = dictionary_size;
    if (set("tau")) c.tau = tau;
    if (set("gamma")) c.gamma = gamma;
    if (set("ly")) c.outcome_lengthscale = outcome_lengthscale;
    if (set("lx")) c.covariate_lengthscale = covariate_lengthscale;
    if (set("dimnorm")) c.outcome_dim_normalized = dim_normalized;
    if (set("pridge")) c.propensity_ridge = propensity_ridge;
    if (set("clip_lo")) c.clip_lo = clip_lo;
    if (set("clip_hi")) c.clip_hi = clip_hi;
    if (set("r0")) c.outcome_ridge_control = ridge_control;
    if (set("r1")) c.outcome_ridge_treated = ridge_treated;
    if (set("fractions")) c.fractions = {fractions.at(0), fractions.at(1), fractions.at(2)};
    if (set("selection")) c.selection = pipeline::parse_selection(selection);
    if (set("score")) c.score = parse_score_kind(score);
    if (set("criterion")) c.criterion = locations::parse_criterion_kind(criterion);
    if (set("steps")) c.gradient_steps = gradient_steps;
    if (set("step_factor")) c.gradient_step_factor = gradient_step_factor;
    if (no_fold) c.fold_train_into_nuisance = false;
    if (set("alpha")) c.alpha = alpha;
    c.seed = set("seed") ? seed : default_seed();
  }
};

void print_result(const TestResult& r, std::ostream& out) {
  out << "DR-ME split-sample test (n_test = " << r.n_test << ", J = " << r.df << ")\n";
  out << "  statistic  " << fixed(r.statistic, 4) << "\n";
  out << "  df         " << r.df << "\n";
  out << "  p-value    " << std::setprecision(6) << r.p_value << "\n";
  out << "  decision   " << (r.reject ? "reject" : "do not reject") << " at alpha = " << r.alpha
      << "\n";
  if (r.diagnostic_only) {
    out << "  (diagnostic only: locations were learned on the test rows)\n";
  }
  out << "  locations (outcome space), witness mean, sd:\n";
  for (Index j = 0; j < r.locations.size(); ++j) {
    out << "    v_" << j + 1 << " = (";
    for (Index k = 0; k < r.locations.points.cols(); ++k) {
      out << (k > 0 ? ", " : "") << fixed(r.locations.points(j, k), 4);
    }
    out << ")  " << fixed(r.mean(j), 5) << "  " << fixed(std::sqrt(r.covariance(j, j)), 5) << "\n";
  }
}

void print_report(const mc::ExperimentReport& report, std::ostream& out) {
  out << std::left << std::setw(16) << "setting" << std::setw(14) << "method" << std::right
      << std::setw(7) << "n" << std::setw(6) << "h" << std::setw(8) << "rate" << std::setw(8)
      << "se" << std::setw(9) << "theory" << "\n";
  for (const auto& r : report.rows) {
    out << std::left << std::setw(16) << r.setting << std::setw(14) << r.method << std::right
        << std::setw(7) << r.n << std::setw(6) << fixed(r.h, 1) << std::setw(8) << fixed(r.rate, 3)
        << std::setw(8) << fixed(r.se, 3) << std::setw(9)
        << (r.theory ? fixed(*r.theory, 3) : std::string("-")) << "\n";
  }
}

struct ReportPaths {
  std::string json;
  std::string csv;
  std::string plot;
};

ReportPaths report_paths(const std::string& out_dir, const std::string& name) {
  const fs::path dir(out_dir);
  return {(dir / (name + ".json")).string(), (dir / (name + ".csv")).string(),
          (dir / (name + "_plot.csv")).string()};
}

void write_report(const mc::ExperimentReport& report, const ReportPaths& paths) {
  write_text(paths.json, io::dump(io::to_json(report)));
  write_text(paths.csv, io::report_csv(report));
  write_text(paths.plot, io::plot_data_csv(report));
}

struct GenerateCommand {
  std::string scenario;
  Index n = 1000;
  Index outcome_dim = 5;
  double h = 0.0;
  std::uint64_t seed = 0;
  std::string output = "drme_data.csv";
};

void cmd_generate(const GenerateCommand& c, std::ostream& out) {
  std::mt19937_64 rng(c.seed);
  dgp::ScenarioParams params;
  params.outcome_dim = c.outcome_dim;
  params.h = c.h;
  const auto generated = dgp::gen_scenario(dgp::parse_scenario(c.scenario), c.n, rng, params);
  std::ostringstream csv;
  io::write_dataset_csv(csv, generated.data);
  write_text(c.output, csv.str());
  io::Json manifest = manifest_header("generate", c.seed);
  manifest["scenario"] = c.scenario;
  manifest["n"] = c.n;
  manifest["outcome_dim"] = c.outcome_dim;
  manifest["h"] = c.h;
  manifest["artifacts"] = {{"data", c.output}};
  write_text(c.output + ".manifest.json", io::dump(manifest));
  out << "wrote " << c.n << " rows to " << c.output << "\n";
}

} // namespace

std::uint64_t default_seed() {
  const char* env = std::getenv("DRME_SEED");
  if (env == nullptr || *env == '\0') {
    return 0;
  }
  std::uint64_t value = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, value);
  if (ec != std::errc() || ptr != end) {
    throw InputError(std::string("DRME_SEED is not an unsigned integer: ") + env);
  }
  return value;
}

io::Json spec_to_json(const mc::ExperimentSpec& s) {
  io::Json j;
  j["name"] = s.name;
  io::Json scenarios = io::Json::array();
  for (const auto sc : s.scenarios) scenarios.push_back(dgp::to_string(sc));
  j["scenarios"] = scenarios;
  io::Json methods = io::Json::array();
  for (const auto m : s.methods) methods.push_back(mc::to_string(m));
  j["methods"] = methods;
  j["n_grid"] = s.n_grid;
  j["h_grid"] = s.h_grid;
  j["outcome_dim"] = s.outcome_dim;
  j["reps"] = s.reps;
  j["alpha"] = s.alpha;
  j["base_seed"] = s.base_seed;
  j["config"] = io::to_json(s.config);
  j["local_path"] = s.local_path ? io::to_json(*s.local_path) : io::Json(nullptr);
  j["keep_statistics"] = s.keep_statistics;
  return j;
}

mc::ExperimentSpec spec_from_json(const io::Json& j) {
  mc::ExperimentSpec s;
  try {
    s.name = j.at("name").get<std::string>();
    for (const auto& sc : j.at("scenarios")) s.scenarios.push_back(dgp::parse_scenario(sc.get<std::string>()));
    for (const auto& m : j.at("methods")) s.methods.push_back(mc::parse_method(m.get<std::string>()));
    s.n_grid = j.at("n_grid").get<std::vector<Index>>();
    s.h_grid = j.at("h_grid").get<std::vector<double>>();
    s.outcome_dim = j.at("outcome_dim").get<Index>();
    s.reps = j.at("reps").get<int>();
    s.alpha = j.at("alpha").get<double>();
    s.base_seed = j.at("base_seed").get<std::uint64_t>();
    s.config = io::config_from_json(j.at("config"));
    if (!j.at("local_path").is_null()) {
      const auto& lp = j.at("local_path");
      dgp::LocalPathSpec spec;
      const auto rows = lp.at("locations").get<std::vector<std::vector<double>>>();
      spec.locations.resize(static_cast<Index>(rows.size()), 1);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        spec.locations(static_cast<Index>(r), 0) = rows[r].at(0);
      }
      spec.lengthscale = lp.at("lengthscale").get<double>();
      spec.noncentrality = lp.at("noncentrality").get<double>();
      spec.noise_sd = lp.at("noise_sd").get<double>();
      s.local_path = spec;
    }
    s.keep_statistics = j.at("keep_statistics").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed experiment spec: ") + e.what());
  }
  return s;
}

TestResult cmd_test(const TestCommand& command, std::ostream& out) {
  const Dataset data = io::read_dataset_csv(command.input);
  const std::string digest = io::file_digest(command.input);
  if (command.config.selection == pipeline::Selection::fixed) {
    throw InputError("the test command learns locations; fixed selection is not available here");
  }
  const TestResult result = pipeline::run_drme_test(data, command.config);
  print_result(result, out);
  write_text(command.output, io::dump(io::to_json(result)));

  io::Json manifest = manifest_header("test", command.config.seed);
  manifest["input"] = {{"path", command.input}, {"digest", digest}, {"rows", data.size()}};
  manifest["config"] = io::to_json(command.config);
  manifest["resolved"] = {{"tau", result.tau},
                          {"gamma", result.gamma},
                          {"outcome_lengthscale", result.outcome_lengthscale},
                          {"outcome_dim_normalized", result.outcome_dim_normalized},
                          {"covariate_lengthscale", result.covariate_lengthscale}};
  manifest["artifacts"] = {{"result", command.output}};
  const std::string manifest_path =
      command.manifest.empty() ? manifest_path_for(command.output) : command.manifest;
  write_text(manifest_path, io::dump(manifest));
  out << "wrote " << command.output << " and " << manifest_path << "\n";
  return result;
}

mc::ExperimentReport cmd_simulate(const SimulateCommand& command, std::ostream& out) {
  const mc::ExperimentReport report = mc::monte_carlo(command.spec);
  print_report(report, out);
  const ReportPaths paths = report_paths(command.out_dir, command.spec.name);
  write_report(report, paths);
  io::Json manifest = manifest_header("simulate", command.spec.base_seed);
  manifest["spec"] = spec_to_json(command.spec);
  manifest["artifacts"] = {{"json", paths.json}, {"csv", paths.csv}, {"plot", paths.plot}};
  const std::string manifest_path = (fs::path(command.out_dir) / (command.spec.name + "_manifest.json")).string();
  write_text(manifest_path, io::dump(manifest));
  out << "wrote " << paths.csv << ", " << paths.json << ", " << paths.plot << "\n";
  return report;
}

mc::ExperimentReport cmd_validate_theory(const TheoryCommand& c, std::ostream& out) {
  mc::ExperimentSpec spec = mc::experiment_preset("local_path");
  spec.reps = c.reps;
  spec.n_grid = c.n_grid;
  spec.h_grid = c.h_grid;
  spec.alpha = c.alpha;
  spec.base_seed = c.seed;
  spec.workers = c.workers;
  spec.config.alpha = c.alpha;

  std::optional<dgp::PilotResult> pilot;
  if (c.reference_pilot) {
    spec.local_path = dgp::LocalPathSpec::reference();
    out << "using the frozen reference pilot locations\n";
  } else {
    std::mt19937_64 rng(derive_seed(c.seed, {kPilotStream}));
    pilot = dgp::pilot_localize(c.pilot_n, c.pilot_dictionary, c.num_locations, std::nullopt, rng);
    spec.local_path = pilot->spec();
    out << "pilot: n = " << pilot->n_pilot << ", M = " << pilot->dictionary_size
        << ", lengthscale = " << fixed(pilot->lengthscale, 4) << ", noncentrality = "
        << fixed(pilot->noncentrality, 4) << "\n  locations:";
    for (Index j = 0; j < pilot->locations.size(); ++j) {
      out << " " << fixed(pilot->locations.points(j, 0), 4);
    }
    out << "\n";
  }

  mc::ExperimentReport report = mc::monte_carlo(spec);
  report.pilot = pilot;
  const double lambda = spec.local_path->noncentrality;
  const int df = static_cast<int>(spec.local_path->locations.rows());

  out << std::right << std::setw(5) << "h" << std::setw(10) << "h^2*lam" << std::setw(9) << "theory";
  for (const Index n : spec.n_grid) out << std::setw(10) << ("n=" + std::to_string(n));
  out << "\n";
  for (const double h : spec.h_grid) {
    out << std::setw(5) << fixed(h, 1) << std::setw(10) << fixed(h * h * lambda, 3) << std::setw(9)
        << fixed(dgp::theory_power(h, lambda, df, c.alpha), 3);
    for (const Index n : spec.n_grid) {
      const auto* row = report.find("local_path", "oracle_fixed", n, h);
      out << std::setw(10) << fixed(row->rate, 3);
    }
    out << "\n";
  }

  // Moment diagnostic and QQ data at the largest n.
  const Index n_max = *std::max_element(spec.n_grid.begin(), spec.n_grid.end());
  out << "mean statistic vs J + h^2*lambda at n = " << n_max << ":\n";
  std::ostringstream qq;
  qq << "h,probability,empirical,theoretical\n";
  for (const double h : spec.h_grid) {
    const auto* row = report.find("local_path", "oracle_fixed", n_max, h);
    double ss = 0.0;
    for (const double s : row->statistics) ss += (s - row->mean_statistic) * (s - row->mean_statistic);
    const double se = std::sqrt(ss / (row->reps - 1.0) / row->reps);
    out << "  h = " << fixed(h, 1) << ": " << fixed(row->mean_statistic, 3) << " (se "
        << fixed(se, 3) << ") vs " << fixed(df + h * h * lambda, 3) << "\n";
    for (const auto& p : mc::qq_points(row->statistics, df, h * h * lambda)) {
      qq << h << ',' << p.probability << ',' << p.empirical << ',' << p.theoretical << '\n';
    }
  }
  if (const auto* null_row = report.find("local_path", "oracle_fixed", n_max, 0.0)) {
    out << "KS distance of the h = 0 statistics to chi2_" << df << ": "
        << fixed(mc::ks_distance(null_row->statistics, df), 4) << "\n";
  }

  const ReportPaths paths = report_paths(c.out_dir, "local_path");
  write_report(report, paths);
  const std::string qq_path = (fs::path(c.out_dir) / "local_path_qq.csv").string();
  write_text(qq_path, qq.str());

  io::Json manifest = manifest_header("validate-theory", c.seed);
  manifest["options"] = {{"reps", c.reps},
                         {"n_grid", c.n_grid},
                         {"h_grid", c.h_grid},
                         {"alpha", c.alpha},
                         {"pilot_n", c.pilot_n},
                         {"pilot_dictionary", c.pilot_dictionary},
                         {"num_locations", c.num_locations},
                         {"reference_pilot", c.reference_pilot}};
  manifest["artifacts"] = {{"json", paths.json}, {"csv", paths.csv}, {"plot", paths.plot}, {"qq", qq_path}};
  write_text((fs::path(c.out_dir) / "local_path_manifest.json").string(), io::dump(manifest));
  out << "wrote " << paths.csv << ", " << paths.json << ", " << qq_path << "\n";
  return report;
}

void cmd_replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& out) {
  const io::Json m = read_json(manifest_path);
  try {
    const std::string sub = m.at("subcommand").get<std::string>();
    if (sub == "test") {
      TestCommand c;
      c.input = m.at("input").at("path").get<std::string>();
      if (io::file_digest(c.input) != m.at("input").at("digest").get<std::string>()) {
        throw InputError("replay: input file '" + c.input + "' changed since the run");
      }
      c.config = io::config_from_json(m.at("config"));
      c.output = redirect(m.at("artifacts").at("result").get<std::string>(), out_dir);
      c.manifest = manifest_path_for(c.output);
      if (!out_dir.empty()) {
        c.manifest = redirect(c.manifest, out_dir);
      }
      cmd_test(c, out);
    } else if (sub == "simulate") {
      SimulateCommand c;
      c.spec = spec_from_json(m.at("spec"));
      c.out_dir = out_dir.empty()
                      ? fs::path(m.at("artifacts").at("json").get<std::string>()).parent_path().string()
                      : out_dir;
      cmd_simulate(c, out);
    } else if (sub == "validate-theory") {
      const auto& o = m.at("options");
      TheoryCommand c;
      c.reps = o.at("reps").get<int>();
      c.n_grid = o.at("n_grid").get<std::vector<Index>>();
      c.h_grid = o.at("h_grid").get<std::vector<double>>();
      c.alpha = o.at("alpha").get<double>();
      c.pilot_n = o.at("pilot_n").get<Index>();
      c.pilot_dictionary = o.at("pilot_dictionary").get<Index>();
      c.num_locations = o.at("num_locations").get<Index>();
      c.reference_pilot = o.at("reference_pilot").get<bool>();
      c.seed = m.at("seed").get<std::uint64_t>();
      c.out_dir = out_dir.empty()
                      ? fs::path(m.at("artifacts").at("json").get<std::string>()).parent_path().string()
                      : out_dir;
      cmd_validate_theory(c, out);
    } else if (sub == "generate") {
      GenerateCommand c;
      c.scenario = m.at("scenario").get<std::string>();
      c.n = m.at("n").get<Index>();
      c.outcome_dim = m.at("outcome_dim").get<Index>();
      c.h = m.at("h").get<double>();
      c.seed = m.at("seed").get<std::uint64_t>();
      c.output = redirect(m.at("artifacts").at("data").get<std::string>(), out_dir);
      cmd_generate(c, out);
    } else {
      throw InputError("replay: unknown subcommand '" + sub + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed manifest: ") + e.what());
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"DR-ME: split-sample doubly robust mean-embedding tests for distributional "
               "treatment effects"};
  app.set_version_flag("--version", std::string(DRME_VERSION));
  app.require_subcommand(1);

  TestCommand test;
  ConfigFlags test_flags;
  auto* test_cmd = app.add_subcommand("test", "run the split-sample test on a CSV file");
  test_cmd->add_option("--input,-i", test.input, "CSV with header x_1..x_dx,a,y_1..y_dy")->required();
  test_cmd->add_option("--out,-o", test.output, "result JSON path");
  test_cmd->add_option("--manifest", test.manifest, "manifest path (default: next to the result)");
  test_flags.add(test_cmd, true);

  std::string experiment;
  std::vector<Index> sim_n;
  std::vector<double> sim_h;
  int sim_reps = 0;
  std::string sim_methods;
  Index sim_dy = 5;
  unsigned sim_workers = 1;
  std::string sim_out = "drme_out";
  ConfigFlags sim_flags;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo rejection rates for a named study");
  sim_cmd->add_option("experiment", experiment,
                      "sharp_null | power | mean_shift | variance_shift | localized_bump | "
                      "two_bump | local_path")
      ->required();
  auto* sim_n_opt = sim_cmd->add_option("--n", sim_n, "sample sizes")->delimiter(',');
  auto* sim_h_opt = sim_cmd->add_option("--h-grid", sim_h, "local strengths (local_path)")->delimiter(',');
  auto* sim_reps_opt = sim_cmd->add_option("--reps", sim_reps, "replications per cell");
  auto* sim_methods_opt = sim_cmd->add_option("--methods", sim_methods, "comma-separated methods");
  auto* sim_dy_opt = sim_cmd->add_option("--dy", sim_dy, "outcome dimension (two_bump)");
  sim_cmd->add_option("--workers", sim_workers, "worker threads (results do not depend on it)");
  sim_cmd->add_option("--out", sim_out, "output directory");
  sim_flags.add(sim_cmd, true);

  TheoryCommand theory;
  auto* th_cmd = app.add_subcommand("validate-theory",
                                    "oracle fixed-location study against the noncentral chi-square law");
  th_cmd->add_option("--reps", theory.reps);
  th_cmd->add_option("--n", theory.n_grid)->delimiter(',');
  th_cmd->add_option("--h-grid", theory.h_grid)->delimiter(',');
  th_cmd->add_option("--alpha", theory.alpha);
  auto* th_seed = th_cmd->add_option("--seed", theory.seed);
  th_cmd->add_option("--pilot-n", theory.pilot_n);
  th_cmd->add_option("--pilot-M", theory.pilot_dictionary);
  th_cmd->add_option("--J", theory.num_locations);
  th_cmd->add_flag("--reference-pilot", theory.reference_pilot,
                   "skip the pilot and use the frozen reference locations");
  th_cmd->add_option("--workers", theory.workers);
  th_cmd->add_option("--out", theory.out_dir, "output directory");

  GenerateCommand gen;
  auto* gen_cmd = app.add_subcommand("generate", "write a synthetic dataset as CSV");
  gen_cmd->add_option("scenario", gen.scenario)->required();
  gen_cmd->add_option("--n", gen.n);
  gen_cmd->add_option("--dy", gen.outcome_dim);
  gen_cmd->add_option("--strength", gen.h, "local-path strength h");
  auto* gen_seed = gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out,-o", gen.output);

  std::string replay_manifest;
  std::string replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "re-run a manifest");
  replay_cmd->add_option("manifest", replay_manifest)->required();
  replay_cmd->add_option("--out-dir", replay_out, "write artifacts here instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*test_cmd) {
      test_flags.apply(test.config);
      cmd_test(test, out);
    } else if (*sim_cmd) {
      SimulateCommand c;
      c.spec = mc::experiment_preset(experiment);
      if (sim_n_opt->count() > 0) c.spec.n_grid = sim_n;
      if (sim_h_opt->count() > 0) c.spec.h_grid = sim_h;
      if (sim_reps_opt->count() > 0) c.spec.reps = sim_reps;
      if (sim_methods_opt->count() > 0) c.spec.methods = mc::parse_method_list(sim_methods);
      if (sim_dy_opt->count() > 0) c.spec.outcome_dim = sim_dy;
      sim_flags.apply(c.spec.config);
      c.spec.base_seed = c.spec.config.seed;
      c.spec.alpha = c.spec.config.alpha;
      c.spec.workers = sim_workers;
      c.out_dir = sim_out;
      if (experiment == "two_bump" && sim_dy_opt->count() > 0) {
        c.spec.name = "two_bump_d" + std::to_string(sim_dy);
      }
      cmd_simulate(c, out);
    } else if (*th_cmd) {
      if (th_seed->count() == 0) theory.seed = default_seed();
      cmd_validate_theory(theory, out);
    } else if (*gen_cmd) {
      if (gen_seed->count() == 0) gen.seed = default_seed();
      cmd_generate(gen, out);
    } else if (*replay_cmd) {
      cmd_replay(replay_manifest, replay_out, out);
    }
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}

} // namespace drme::cli
