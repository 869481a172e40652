#include "npmd/cli/config.hpp"

#include <cmath>
#include <set>

#include "npmd/bounds.hpp"
#include "npmd/directions.hpp"
#include "npmd/errors.hpp"
#include "npmd/schedule.hpp"
#include "npmd/simulate.hpp"

namespace npmd::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::set<std::string> kCommands = {"constants", "rates", "bracket",
                                         "mogulskii-check", "counterexample"};

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  T v{};
  read(j, key, v);
  out = v;
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["command"] = c.command;
  j["direction"] = c.direction;
  j["theta"] = Schedule::parse(c.theta).to_string();
  j["x"] = c.x ? json(Schedule::parse(*c.x).to_string()) : json(nullptr);
  j["x_over_theta"] =
      c.x_over_theta ? json(Schedule::parse(*c.x_over_theta).to_string()) : json(nullptr);
  j["n_grid"] = c.n_grid;
  j["budget"] = c.budget;
  j["seed"] = c.seed;
  j["estimator"] = c.estimator;
  j["regime"] = c.regime;
  j["exact_tilt"] = c.exact_tilt;
  j["grid_size"] = c.grid_size;
  j["rel_tol"] = c.rel_tol;
  j["abs_tol"] = c.abs_tol;
  j["max_subdivisions"] = c.max_subdivisions;
  j["m_rule"] = c.m_rule;
  j["k_range"] = c.k_range;
  j["theta_power"] = c.theta_power;
  j["q"] = opt(c.q);
  j["mog_x"] = c.mog_x;
  j["mog_m"] = c.mog_m;
  j["mog_n"] = c.mog_n;
  j["mog_lambda"] = c.mog_lambda;
  j["random_instances"] = c.random_instances;
  j["ce_theta"] = c.ce_theta;
  j["ce_x"] = c.ce_x;
  j["ce_q"] = c.ce_q;
  return j;
}

ExperimentConfig from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {
      "command", "direction", "theta", "x", "x_over_theta", "n_grid", "budget",
      "seed", "estimator", "regime", "exact_tilt", "grid_size", "rel_tol",
      "abs_tol", "max_subdivisions", "m_rule", "k_range", "theta_power", "q",
      "mog_x", "mog_m", "mog_n", "mog_lambda", "random_instances", "ce_theta",
      "ce_x", "ce_q"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  ExperimentConfig c;
  read(j, "command", c.command);
  read(j, "direction", c.direction);
  read(j, "theta", c.theta);
  read(j, "x", c.x);
  read(j, "x_over_theta", c.x_over_theta);
  read(j, "n_grid", c.n_grid);
  read(j, "budget", c.budget);
  read(j, "seed", c.seed);
  read(j, "estimator", c.estimator);
  read(j, "regime", c.regime);
  read(j, "exact_tilt", c.exact_tilt);
  read(j, "grid_size", c.grid_size);
  read(j, "rel_tol", c.rel_tol);
  read(j, "abs_tol", c.abs_tol);
  read(j, "max_subdivisions", c.max_subdivisions);
  read(j, "m_rule", c.m_rule);
  read(j, "k_range", c.k_range);
  read(j, "theta_power", c.theta_power);
  read(j, "q", c.q);
  read(j, "mog_x", c.mog_x);
  read(j, "mog_m", c.mog_m);
  read(j, "mog_n", c.mog_n);
  read(j, "mog_lambda", c.mog_lambda);
  read(j, "random_instances", c.random_instances);
  read(j, "ce_theta", c.ce_theta);
  read(j, "ce_x", c.ce_x);
  read(j, "ce_q", c.ce_q);
  return c;
}

std::pair<int, int> parse_k_range(const std::string& text) {
  const auto colon = text.find(':');
  try {
    std::size_t used = 0;
    if (colon == std::string::npos) {
      const int k = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return {k, k};
    }
    const std::string a = text.substr(0, colon);
    const std::string b = text.substr(colon + 1);
    const int lo = std::stoi(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    const int hi = std::stoi(b, &used);
    if (used != b.size()) throw std::invalid_argument(b);
    if (lo > hi) throw ConfigError("k range must be increasing: '" + text + "'");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse k range '" + text + "' (expected a:b)");
  }
}

std::int64_t parse_count(const std::string& text, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !(v >= 1.0) ||
      v != std::floor(v) || v > 9.0e18) {
    throw ConfigError(what + " must be a positive integer, got '" + text + "'");
  }
  return static_cast<std::int64_t>(v);
}

void validate(const ExperimentConfig& c) {
  if (!kCommands.contains(c.command)) {
    throw ConfigError("unknown command '" + c.command + "'");
  }
  try {
    parse_direction(c.direction);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("direction: ") + e.what());
  }
  Schedule::parse(c.theta);
  if (c.x) Schedule::parse(*c.x);
  if (c.x_over_theta) Schedule::parse(*c.x_over_theta);
  if (c.x && c.x_over_theta) {
    throw ConfigError("give either --x or --x-over-theta, not both");
  }
  parse_n_grid(c.n_grid);
  parse_estimator(c.estimator);
  parse_m_rule(c.m_rule);
  parse_k_range(c.k_range);
  if (c.budget < 1) throw ConfigError("budget must be positive");
  if (c.grid_size < 16) throw ConfigError("grid_size must be at least 16");
  if (!(c.rel_tol > 0.0) || !(c.abs_tol > 0.0)) {
    throw ConfigError("quadrature tolerances must be positive");
  }
  if (c.max_subdivisions < 1) throw ConfigError("max_subdivisions must be positive");
  if (c.mog_n < 1) throw ConfigError("mogulskii n must be positive");
  if (!(c.mog_m > 0.0)) throw ConfigError("mogulskii M must be positive");
  if (c.random_instances < 0) throw ConfigError("random_instances must be >= 0");
  parse_preset(c.regime);
}

}  // namespace npmd::cli
