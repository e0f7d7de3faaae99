#pragma once

#include "drme/drscore.hpp"
#include "drme/montecarlo.hpp"
#include "drme/pipeline.hpp"

#include <json.hpp>

#include <string>

namespace drme::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

Json to_json(const Matrix& m);
Json to_json(const LocationSet& locations);
Json to_json(const TestResult& result);
Json to_json(const pipeline::TestConfig& config);
pipeline::TestConfig config_from_json(const Json& j);
Json to_json(const dgp::PilotResult& pilot);
Json to_json(const dgp::LocalPathSpec& spec);
Json to_json(const mc::ExperimentReport& report);

/// One row per (setting, method, n, h).
std::string report_csv(const mc::ExperimentReport& report);

/// Long-format series for plotting rejection rate against n (or h).
std::string plot_data_csv(const mc::ExperimentReport& report);

/// Stable text rendering used for every artifact written to disk.
std::string dump(const Json& j);

} // namespace drme::io
