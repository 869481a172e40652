#ifndef NPMD_CLI_CONFIG_HPP
#define NPMD_CLI_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace npmd::cli {

inline constexpr const char* kLibraryVersion = "0.1.0";

// One experiment. Every field has a canonical text form so a config
// serialises and parses back to the same JSON.
struct ExperimentConfig {
  std::string command = "rates";  // constants, rates, bracket, mogulskii-check, counterexample
  std::string direction = "step";
  std::string theta = "0.5";                // schedule in n
  std::optional<std::string> x = "n^-0.25";  // schedule in n
  std::optional<std::string> x_over_theta;   // x = ratio * theta when set
  std::string n_grid = "10:10000:log";
  std::int64_t budget = 100000;
  std::string seed = "0";
  std::string estimator = "is";
  std::string regime = "auto";
  bool exact_tilt = false;
  std::int64_t grid_size = 4096;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int max_subdivisions = 2000;
  // bracket
  std::string m_rule = "proof";
  std::string k_range = "2:6";
  double theta_power = 5.0;
  std::optional<double> q;
  // mogulskii-check
  double mog_x = 0.3;
  double mog_m = 1.8;
  int mog_n = 10;
  double mog_lambda = 0.2027325540540822;  // atanh(0.2)
  int random_instances = 0;
  // counterexample
  double ce_theta = 0.001;
  double ce_x = 0.5;
  double ce_q = 0.2;

  std::string output_dir;  // resolved; not part of the serialised config
};

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
// ConfigError on unknown keys or wrong types.
ExperimentConfig from_json(const nlohmann::json& j);

// Structural checks that do not need the numerics (command name, grids,
// schedules parse, counts positive). ConfigError naming the violation.
void validate(const ExperimentConfig& cfg);

// Inclusive integer range "a:b".
std::pair<int, int> parse_k_range(const std::string& text);

// Parses a count written as an integer or in scientific notation ("1e6").
std::int64_t parse_count(const std::string& text, const std::string& what);

}  // namespace npmd::cli

#endif  // NPMD_CLI_CONFIG_HPP
