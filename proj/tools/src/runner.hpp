#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ambitlab/results.hpp"
#include "config.hpp"

namespace ambitlab::cli {

struct ExperimentResult {
  ResultTable table;
  nlohmann::ordered_json summary;  // experiment-specific fields
  bool inconclusive = false;       // some fit the verdict depends on is flagged
};

struct RunContext {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::function<void(const std::string&)> log = [](const std::string&) {};
};

/// Runs the experiment named by run.experiment. Invalid parameters throw
/// std::invalid_argument (or ConfigError), numerical failures std::runtime_error.
ExperimentResult run_experiment(const Config& config, const RunContext& context);

struct RunRequest {
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> experiment;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> outdir;
};

/// Full `ambitlab run`: builds the config, runs, writes results.csv,
/// summary.json and run.log into the output directory. Returns 0 on success,
/// 2 when the result is statistically inconclusive and 1 on any error.
int run_command(const RunRequest& request);

}  // namespace ambitlab::cli
