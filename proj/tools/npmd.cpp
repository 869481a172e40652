// npmd command-line driver.
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "npmd/cli/config.hpp"
#include "npmd/cli/experiment.hpp"
#include "npmd/errors.hpp"

namespace {

using npmd::cli::ExperimentConfig;
using Setter = std::function<void(ExperimentConfig&)>;

double to_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw npmd::ConfigError(what + " must be a number, got '" + s + "'");
  }
  return v;
}

int to_int(const std::string& s, const std::string& what) {
  const auto v = npmd::cli::parse_count(s, what);
  if (v > 1000000000) throw npmd::ConfigError(what + " is too large");
  return static_cast<int>(v);
}

// Options are recorded as setters and applied on top of --config afterwards,
// so explicit flags override the file.
class Binder {
 public:
  explicit Binder(std::vector<Setter>& pending) : pending_(pending) {}

  void opt(CLI::App* app, const std::string& name, const std::string& help,
           std::function<void(ExperimentConfig&, const std::string&)> set) {
    app->add_option_function<std::string>(
        name,
        [this, set](const std::string& v) {
          pending_.push_back([set, v](ExperimentConfig& c) { set(c, v); });
        },
        help);
  }

 private:
  std::vector<Setter>& pending_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moderate-deviation experiments for the Neyman-Pearson uniformity statistic"};
  app.require_subcommand(1);
  app.fallthrough();

  std::vector<Setter> pending;
  Binder b(pending);
  std::string config_path;
  std::string output_dir;
  unsigned workers = 1;
  bool dump_config = false;

  app.add_option("--config", config_path, "JSON config file; flags override it");
  app.add_option("--output", output_dir,
                 "output directory (default $NPMD_OUTPUT_DIR or .)");
  app.add_option("--workers", workers, "worker threads (output does not depend on it)")
      ->check(CLI::Range(1u, 1024u));
  app.add_flag("--dump-config", dump_config, "print the canonical config and exit");

  const auto quad = [&b](CLI::App* s) {
    b.opt(s, "--rel-tol", "quadrature relative tolerance",
          [](auto& c, auto& v) { c.rel_tol = to_double(v, "rel-tol"); });
    b.opt(s, "--abs-tol", "quadrature absolute tolerance",
          [](auto& c, auto& v) { c.abs_tol = to_double(v, "abs-tol"); });
    b.opt(s, "--max-subdivisions", "quadrature subdivision cap",
          [](auto& c, auto& v) { c.max_subdivisions = to_int(v, "max-subdivisions"); });
  };
  const auto direction = [&b](CLI::App* s) {
    b.opt(s, "--direction", "ar:<r>, step or cosine",
          [](auto& c, auto& v) { c.direction = v; });
  };
  const auto schedules = [&b](CLI::App* s) {
    b.opt(s, "--theta", "theta schedule, e.g. 0.5 or n^-0.25",
          [](auto& c, auto& v) { c.theta = v; });
    b.opt(s, "--x", "x schedule, e.g. n^-0.25", [](auto& c, auto& v) {
      c.x = v;
      c.x_over_theta.reset();
    });
    b.opt(s, "--x-over-theta", "x as a multiple of theta", [](auto& c, auto& v) {
      c.x_over_theta = v;
      c.x.reset();
    });
    b.opt(s, "--n", "n grid: a:b:log[:k], a:b:lin:step or a,b,c",
          [](auto& c, auto& v) { c.n_grid = v; });
    b.opt(s, "--regime", "preset: auto, thm1, corollary, thm3, undecided",
          [](auto& c, auto& v) { c.regime = v; });
  };

  CLI::App* constants = app.add_subcommand("constants", "normalizing constants per grid point");
  direction(constants);
  schedules(constants);
  quad(constants);

  CLI::App* rates = app.add_subcommand("rates", "Monte Carlo rate curve");
  direction(rates);
  schedules(rates);
  quad(rates);
  b.opt(rates, "--budget", "replications per point",
        [](auto& c, auto& v) { c.budget = npmd::cli::parse_count(v, "budget"); });
  b.opt(rates, "--seed", "stream key (integer or any string)",
        [](auto& c, auto& v) { c.seed = v; });
  b.opt(rates, "--estimator", "direct, is or both",
        [](auto& c, auto& v) { c.estimator = v; });
  b.opt(rates, "--grid-size", "tilt table cells",
        [](auto& c, auto& v) { c.grid_size = npmd::cli::parse_count(v, "grid-size"); });
  rates->add_flag_callback(
      "--exact-tilt",
      [&pending] { pending.push_back([](ExperimentConfig& c) { c.exact_tilt = true; }); },
      "solve m(lambda) = x instead of lambda = x");

  CLI::App* bracket = app.add_subcommand("bracket", "certified rate bracket");
  direction(bracket);
  schedules(bracket);
  quad(bracket);
  b.opt(bracket, "--k", "k range for the thm3 schedule x = 10^(-k/2)",
        [](auto& c, auto& v) { c.k_range = v; });
  b.opt(bracket, "--theta-power", "thm3 schedule theta = x^p",
        [](auto& c, auto& v) { c.theta_power = to_double(v, "theta-power"); });
  b.opt(bracket, "--q", "fix q of the counterexample law (default: optimised)",
        [](auto& c, auto& v) { c.q = to_double(v, "q"); });
  b.opt(bracket, "--m-rule", "proof, optimized or <f>nx2",
        [](auto& c, auto& v) { c.m_rule = v; });

  CLI::App* mog = app.add_subcommand("mogulskii-check", "exact check of the Mogulskii inequality");
  b.opt(mog, "--n", "sample size", [](auto& c, auto& v) { c.mog_n = to_int(v, "n"); });
  b.opt(mog, "--x", "threshold on the mean",
        [](auto& c, auto& v) { c.mog_x = to_double(v, "x"); });
  b.opt(mog, "--M", "free parameter M", [](auto& c, auto& v) { c.mog_m = to_double(v, "M"); });
  b.opt(mog, "--lambda", "tilt of the fair coin",
        [](auto& c, auto& v) { c.mog_lambda = to_double(v, "lambda"); });
  b.opt(mog, "--random", "number of random instances", [](auto& c, auto& v) {
    c.random_instances = static_cast<int>(npmd::cli::parse_count(v, "random"));
  });
  b.opt(mog, "--seed", "stream key", [](auto& c, auto& v) { c.seed = v; });

  CLI::App* ce = app.add_subcommand("counterexample", "counterexample law diagnostics");
  direction(ce);
  quad(ce);
  b.opt(ce, "--theta", "theta", [](auto& c, auto& v) { c.ce_theta = to_double(v, "theta"); });
  b.opt(ce, "--x", "x", [](auto& c, auto& v) { c.ce_x = to_double(v, "x"); });
  b.opt(ce, "--q", "q < r", [](auto& c, auto& v) { c.ce_q = to_double(v, "q"); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw npmd::ConfigError("cannot read config file " + config_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw npmd::ConfigError(std::string("config file: ") + e.what());
      }
      cfg = npmd::cli::from_json(j);
    }
    cfg.command = app.get_subcommands().front()->get_name();
    for (const auto& set : pending) set(cfg);

    if (dump_config) {
      npmd::cli::validate(cfg);
      std::cout << npmd::cli::to_json(cfg).dump(2) << '\n';
      return 0;
    }
    if (!output_dir.empty()) {
      cfg.output_dir = output_dir;
    } else if (const char* env = std::getenv("NPMD_OUTPUT_DIR")) {
      cfg.output_dir = env;
    }
    const auto out = npmd::cli::run(cfg, workers);
    std::cout << out.table;
    std::cerr << "wrote " << out.table_path << " and " << out.manifest_path << '\n';
    return 0;
  } catch (const npmd::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const npmd::Error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
