#include "npmd/cli/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "npmd/bounds.hpp"
#include "npmd/directions.hpp"
#include "npmd/errors.hpp"
#include "npmd/quadrature.hpp"
#include "npmd/schedule.hpp"
#include "npmd/simulate.hpp"
#include "npmd/tilting.hpp"

namespace npmd::cli {

using nlohmann::ordered_json;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

// JSON has no infinities; store them as strings.
ordered_json jnum(double v) {
  if (std::isfinite(v)) return v;
  return num(v);
}

class Table {
 public:
  explicit Table(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << '\n';
  }
  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(std::int64_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "true" : "false"; }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(std::string_view v) { return std::string(v); }
  static std::string cell(const char* v) { return v; }
  std::ostringstream out_;
};

QuadratureSpec quad_spec(const ExperimentConfig& c) {
  QuadratureSpec s;
  s.rel_tol = c.rel_tol;
  s.abs_tol = c.abs_tol;
  s.max_subdivisions = c.max_subdivisions;
  s.validate();
  return s;
}

ordered_json constants_json(const NormalizingConstants& k) {
  return {{"e0n", jnum(k.e0n)},
          {"sigma0n", jnum(k.sigma0n)},
          {"e0n_ratio", jnum(k.e0n_ratio)},
          {"sigma_ratio", jnum(k.sigma_ratio)}};
}

XRule x_rule_of(const ExperimentConfig& c) {
  if (c.x_over_theta) return {Schedule::parse(*c.x_over_theta), true};
  if (c.x) return {Schedule::parse(*c.x), false};
  throw ConfigError("an x schedule (--x or --x-over-theta) is required");
}

std::string run_constants(const ExperimentConfig& c, ordered_json& m) {
  const Direction dir = parse_direction(c.direction);
  const Schedule theta = Schedule::parse(c.theta);
  const QuadratureSpec spec = quad_spec(c);
  Table t({"n", "theta", "e0n", "sigma0n", "e0n_ratio", "sigma_ratio", "mgf_domain_sup"});
  ordered_json pts = ordered_json::array();
  for (std::int64_t n : parse_n_grid(c.n_grid)) {
    const double th = theta(static_cast<double>(n));
    const AlternativeModel model = validate_model(dir, th);
    const NormalizingConstants k = compute_constants(model, spec);
    const double sup = mgf_domain_sup(model, k);
    t.row(n, th, k.e0n, k.sigma0n, k.e0n_ratio, k.sigma_ratio, sup);
    ordered_json p = {{"n", n}, {"theta", th}};
    p.update(constants_json(k));
    pts.push_back(p);
  }
  m["points"] = pts;
  return t.str();
}

std::string run_rates(const ExperimentConfig& c, unsigned workers,
                      ordered_json& m) {
  const Direction dir = parse_direction(c.direction);
  const Schedule theta = Schedule::parse(c.theta);
  const XRule xr = x_rule_of(c);
  const auto grid = parse_n_grid(c.n_grid);
  RateCurveOptions opt;
  opt.preset = parse_preset(c.regime);
  opt.estimator = parse_estimator(c.estimator);
  opt.stream_key = parse_stream_key(c.seed);
  opt.workers = workers;
  opt.exact_tilt = c.exact_tilt;
  opt.grid_size = static_cast<std::size_t>(c.grid_size);
  opt.spec = quad_spec(c);
  const auto points = md_rate_curve(dir, xr, theta, grid, c.budget, opt);

  Table t({"n", "x", "theta", "p_hat", "std_err", "rate", "ci_lo", "ci_hi",
           "n_effective", "estimator"});
  ordered_json pts = ordered_json::array();
  for (const RatePoint& p : points) {
    ordered_json jp = {{"n", p.n}, {"x", p.x}, {"theta", p.theta},
                       {"n_x2", static_cast<double>(p.n) * p.x * p.x}};
    jp.update(constants_json(p.constants));
    jp["regime"] = std::string(to_string(p.regime));
    ordered_json ests = ordered_json::array();
    for (const TailEstimate& e : p.estimates) {
      t.row(p.n, p.x, p.theta, e.p_hat, e.std_err, e.rate, e.ci_lo, e.ci_hi,
            e.n_effective, e.estimator);
      ests.push_back({{"estimator", e.estimator},
                      {"log_p", jnum(e.log_p)},
                      {"hits", e.hits},
                      {"replications", e.replications},
                      {"budget_limited", e.budget_limited},
                      {"interval_clamped", e.interval_clamped},
                      {"degenerate_weights", e.degenerate_weights}});
    }
    jp["estimates"] = ests;
    pts.push_back(jp);
  }
  m["stream_key"] = std::to_string(opt.stream_key);
  m["points"] = pts;

  // Theorem 3 premise check along the grid for a_r directions.
  if (dir.singularity() && dir.name().starts_with("ar:")) {
    std::vector<double> thetas;
    std::vector<double> xs;
    for (const RatePoint& p : points) {
      thetas.push_back(p.theta);
      xs.push_back(p.x);
    }
    ordered_json qs = ordered_json::array();
    const double r = dir.singularity()->exponent;
    for (int i = 1; i < 100; ++i) {
      const double q = r * i / 100.0;
      if (thm3_conditions_hold(r, q, thetas, xs)) qs.push_back(q);
    }
    m["thm3_q_satisfying_conditions"] = qs;
  }
  return t.str();
}

std::string run_bracket(const ExperimentConfig& c, ordered_json& m) {
  const Direction dir = parse_direction(c.direction);
  const QuadratureSpec spec = quad_spec(c);
  const MRule rule = parse_m_rule(c.m_rule);
  Table t({"n", "x", "theta", "D", "p_n_bound", "M", "upper_rate", "lower_rate", "regime"});
  ordered_json pts = ordered_json::array();

  const auto record = [&](const RateBracket& b, const NormalizingConstants& k,
                          std::string_view regime) {
    t.row(b.n, b.x, b.theta, b.kl, b.p_n_bound, b.M, b.upper_rate, b.lower_rate, regime);
    ordered_json jp = {{"n", b.n}, {"x", b.x}, {"theta", b.theta}, {"path", b.path}};
    jp.update(constants_json(k));
    if (b.path == "tilt") {
      jp["lambda"] = b.lambda;
    } else {
      jp["q"] = b.q;
    }
    jp["chernoff_available"] = b.chernoff_available;
    pts.push_back(jp);
  };

  if (c.regime == "thm3") {
    if (!dir.singularity() || !dir.name().starts_with("ar:")) {
      throw ConfigError("Theorem 3 bracket requires an a_r direction");
    }
    const auto [k_lo, k_hi] = parse_k_range(c.k_range);
    for (const Thm3Point& p : thm3_schedule(k_lo, k_hi, c.theta_power)) {
      const AlternativeModel model = validate_model(dir, p.theta);
      const NormalizingConstants k = compute_constants(model, spec);
      const RateBracket b = counterexample_bracket(model, k, p.n, p.x, c.q, rule, spec);
      record(b, k, "thm3");
    }
    m["schedule"] = {{"x", "10^(-k/2)"},
                     {"theta", "x^" + format_double(c.theta_power)},
                     {"n", "theta^-4"}};
  } else {
    const Schedule theta = Schedule::parse(c.theta);
    const XRule xr = x_rule_of(c);
    const auto grid = parse_n_grid(c.n_grid);
    validate_rate_schedule(dir, xr, theta, grid, parse_preset(c.regime));
    for (std::int64_t n : grid) {
      const double nd = static_cast<double>(n);
      const double th = theta(nd);
      const double x = xr.relative_to_theta ? xr.schedule(nd) * th : xr.schedule(nd);
      const AlternativeModel model = validate_model(dir, th);
      const NormalizingConstants k = compute_constants(model, spec);
      const RateBracket b = certified_rate_bracket(model, k, std::nullopt, nd, x, rule, spec);
      record(b, k, to_string(classify_point(dir, th, x, k.sigma0n)));
    }
  }
  m["points"] = pts;
  return t.str();
}

std::string run_mogulskii(const ExperimentConfig& c, ordered_json& m) {
  Table t({"instance", "n", "x", "M", "lambda", "kl", "p_event", "p_miss", "lhs", "rhs", "holds"});
  const DiscreteDistribution coin({{-1.0, 0.5}, {1.0, 0.5}});
  const DiscreteDistribution q = coin.tilt(c.mog_lambda);
  const MogulskiiCheck f = mogulskii_lower(coin, q, c.mog_x, c.mog_m, c.mog_n);
  t.row(0, c.mog_n, c.mog_x, c.mog_m, c.mog_lambda, f.kl, f.p_event, f.p_miss,
        f.lhs, f.rhs, f.holds);
  int violations = f.holds ? 0 : 1;
  const std::uint64_t key = parse_stream_key(c.seed);
  for (int i = 1; i <= c.random_instances; ++i) {
    Stream s(key, static_cast<std::uint64_t>(i));
    const MogulskiiInstance inst = random_mogulskii_instance(s);
    const MogulskiiCheck r = mogulskii_lower(inst.p, inst.q, inst.x, inst.M, inst.n);
    t.row(i, inst.n, inst.x, inst.M, inst.lambda, r.kl, r.p_event, r.p_miss,
          r.lhs, r.rhs, r.holds);
    if (!r.holds) ++violations;
  }
  m["fixture"] = {{"P", "fair +-1"}, {"Q", "tilt of P by lambda"}};
  m["random_instances"] = {{"generator", "random_mogulskii_instance"},
                           {"stream_key", std::to_string(key)},
                           {"stream_index", "instance number"}};
  m["violations"] = violations;
  return t.str();
}

std::string run_counterexample(const ExperimentConfig& c, ordered_json& m) {
  const Direction dir = parse_direction(c.direction);
  if (!dir.singularity() || !dir.name().starts_with("ar:")) {
    throw ConfigError("counterexample requires an a_r direction");
  }
  const QuadratureSpec spec = quad_spec(c);
  const double r = dir.singularity()->exponent;
  const AlternativeModel model = validate_model(dir, c.ce_theta);
  const NormalizingConstants k = compute_constants(model, spec);
  const CounterexampleTilt ct = make_counterexample(r, c.ce_q, c.ce_theta, c.ce_x);
  const double kl = counterexample_kl(ct);
  const double kl_asym = counterexample_kl_asymptotic(ct);
  const CounterexampleMoments mom = counterexample_moments(ct, model, k, spec);
  Table t({"r", "q", "theta", "x", "c", "w", "kappa", "kl", "kl_asymptotic",
           "kl_ratio", "mean_y", "var_y", "kappa_margin", "bump_mass"});
  t.row(r, ct.q, ct.theta, ct.x, ct.c, ct.w, ct.kappa, kl, kl_asym, kl / kl_asym,
        mom.mean, mom.variance, mom.kappa_margin, ct.bump_mass());
  m["constants"] = constants_json(k);
  return t.str();
}

}  // namespace

RunOutput execute(const ExperimentConfig& cfg, unsigned workers) {
  validate(cfg);
  RunOutput out;
  ordered_json& m = out.manifest;
  m["library"] = "npmd";
  m["version"] = kLibraryVersion;
  m["config"] = to_json(cfg);
  if (cfg.command == "constants") {
    out.table = run_constants(cfg, m);
  } else if (cfg.command == "rates") {
    out.table = run_rates(cfg, workers, m);
  } else if (cfg.command == "bracket") {
    out.table = run_bracket(cfg, m);
  } else if (cfg.command == "mogulskii-check") {
    out.table = run_mogulskii(cfg, m);
  } else {
    out.table = run_counterexample(cfg, m);
  }
  return out;
}

RunOutput run(const ExperimentConfig& cfg, unsigned workers) {
  RunOutput out = execute(cfg, workers);
  const std::filesystem::path dir = cfg.output_dir.empty() ? "." : cfg.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string());
  out.table_path = (dir / (cfg.command + ".csv")).string();
  out.manifest_path = (dir / (cfg.command + ".manifest.json")).string();
  std::ofstream tf(out.table_path, std::ios::binary);
  tf << out.table;
  std::ofstream mf(out.manifest_path, std::ios::binary);
  mf << out.manifest.dump(2) << '\n';
  if (!tf || !mf) throw ConfigError("cannot write output files in " + dir.string());
  return out;
}

MogulskiiInstance random_mogulskii_instance(Stream& s) {
  const auto below = [&s](int k) {
    return static_cast<int>(s.uniform() * k);
  };
  const int atoms = 2 + below(4);
  std::vector<int> values;
  while (static_cast<int>(values.size()) < atoms) {
    const int v = below(9) - 4;
    if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
  }
  std::vector<double> w(atoms);
  for (double& x : w) x = 0.05 + s.uniform();
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<DiscreteDistribution::Atom> a;
  for (int i = 0; i < atoms; ++i) a.emplace_back(values[i], w[i] / total);
  DiscreteDistribution p(std::move(a));
  const double lambda = 2.0 * s.uniform() - 1.0;
  DiscreteDistribution q = p.tilt(lambda);
  const double lo = p.atoms().front().first;
  const double hi = p.atoms().back().first;
  const double x = lo + (hi - lo) * s.uniform();
  const double M = 0.1 + 5.9 * s.uniform();
  const int n = 1 + below(12);
  return {std::move(p), std::move(q), lambda, x, M, n};
}

}  // namespace npmd::cli
