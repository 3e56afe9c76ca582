#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ambitlab: SPDE, Levy basis and ambit field experiments"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "run one experiment and write results.csv, summary.json, run.log");

  std::vector<std::string> positional;
  std::vector<std::string> sets;
  std::optional<std::string> experiment;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> outdir;
  run->add_option("args", positional, "config file and/or key=value overrides");
  run->add_option("--set", sets, "override section.key=value (repeatable)");
  run->add_option("--experiment", experiment, "experiment name (overrides run.experiment)");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--workers", workers, "worker threads (0: AMBITLAB_WORKERS, otherwise 1)");
  run->add_option("--outdir", outdir, "existing output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  ambitlab::cli::RunRequest request;
  for (const auto& arg : positional) {
    if (arg.find('=') != std::string::npos) {
      request.overrides.push_back(arg);
    } else if (!request.config_path) {
      request.config_path = arg;
    } else {
      std::cerr << "ambitlab: more than one config file given ('" << *request.config_path
                << "', '" << arg << "')\n";
      return 1;
    }
  }
  request.overrides.insert(request.overrides.end(), sets.begin(), sets.end());
  request.experiment = experiment;
  request.seed = seed;
  request.workers = workers;
  request.outdir = outdir;
  return ambitlab::cli::run_command(request);
}
