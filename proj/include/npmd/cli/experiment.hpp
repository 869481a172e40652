#ifndef NPMD_CLI_EXPERIMENT_HPP
#define NPMD_CLI_EXPERIMENT_HPP

#include <cstdint>
#include <string>

#include "json.hpp"
#include "npmd/bounds.hpp"
#include "npmd/cli/config.hpp"
#include "npmd/random.hpp"

namespace npmd::cli {

struct RunOutput {
  std::string table;  // CSV with a fixed header per command
  nlohmann::ordered_json manifest;
  std::string table_path;
  std::string manifest_path;
};

// Runs the command in memory. Library errors propagate.
RunOutput execute(const ExperimentConfig& cfg, unsigned workers = 1);

// execute() then writes <command>.csv and <command>.manifest.json into
// cfg.output_dir (created if missing).
RunOutput run(const ExperimentConfig& cfg, unsigned workers = 1);

// Random Mogulskii instance: 2-5 atoms on a small integer lattice, a random
// tilt Q of P, n in [1, 12], x between the extreme atoms, M in (0.1, 6).
struct MogulskiiInstance {
  DiscreteDistribution p;
  DiscreteDistribution q;
  double lambda;
  double x;
  double M;
  int n;
};
MogulskiiInstance random_mogulskii_instance(Stream& stream);

}  // namespace npmd::cli

#endif  // NPMD_CLI_EXPERIMENT_HPP
