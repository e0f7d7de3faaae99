#pragma once

#include "drme/montecarlo.hpp"
#include "drme/pipeline.hpp"
#include "drme/serialize.hpp"

#include <ostream>
#include <string>

namespace drme::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

struct TestCommand {
  std::string input;
  std::string output = "drme_result.json";
  std::string manifest; // empty: derived from `output`
  pipeline::TestConfig config;
};

struct SimulateCommand {
  mc::ExperimentSpec spec;
  std::string out_dir = "drme_out";
};

struct TheoryCommand {
  int reps = 2000;
  std::vector<Index> n_grid{500, 1000, 3000};
  std::vector<double> h_grid{0, 1, 2, 3, 4, 6, 8};
  double alpha = 0.05;
  std::uint64_t seed = 0;
  Index pilot_n = 100000;
  Index pilot_dictionary = 100;
  Index num_locations = 2;
  bool reference_pilot = false; // skip the pilot and use the frozen reference values
  std::string out_dir = "drme_out";
  unsigned workers = 1;
};

TestResult cmd_test(const TestCommand& command, std::ostream& out);
mc::ExperimentReport cmd_simulate(const SimulateCommand& command, std::ostream& out);
mc::ExperimentReport cmd_validate_theory(const TheoryCommand& command, std::ostream& out);
/// Re-runs a manifest; `out_dir` (if nonempty) redirects every artifact.
void cmd_replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& out);

io::Json spec_to_json(const mc::ExperimentSpec& spec);
mc::ExperimentSpec spec_from_json(const io::Json& j);

/// Seed from DRME_SEED, or 0 when unset.
std::uint64_t default_seed();

/// Entry point of the drme tool. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace drme::cli
