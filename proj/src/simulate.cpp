#include "npmd/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "npmd/errors.hpp"
#include "npmd/numeric.hpp"
#include "npmd/random.hpp"

namespace npmd {

std::uint64_t parse_stream_key(std::string_view text) {
  if (!text.empty() &&
      std::all_of(text.begin(), text.end(), [](char ch) { return ch >= '0' && ch <= '9'; }) &&
      text.size() <= 19) {
    std::uint64_t v = 0;
    for (char ch : text) v = v * 10 + static_cast<std::uint64_t>(ch - '0');
    return v;
  }
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  return h;
}

void TailQuery::validate() const {
  if (n < 1) throw ParameterError("tail query needs n >= 1");
  if (mc_budget < 1) throw ParameterError("tail query needs a positive budget");
  if (!std::isfinite(x)) throw ParameterError("tail query x must be finite");
  if (x > 10.0 * constants.sigma0n) {
    std::ostringstream os;
    os << "x=" << x << " exceeds the sanity cap 10 sigma0n = "
       << 10.0 * constants.sigma0n;
    throw ParameterError(os.str());
  }
  if (workers < 1) throw ParameterError("at least one worker is required");
}

double md_rate(double log_p, double n, double x) {
  return -log_p / (n * x * x);
}

double compute_vn(const AlternativeModel& model, const NormalizingConstants& c,
                  std::span<const double> sample) {
  if (sample.empty()) throw ParameterError("compute_vn needs a nonempty sample");
  numeric::KahanSum sum;
  for (double t : sample) {
    const double a = eval_direction(model.direction, t);
    const double dens = 1.0 + model.theta * a;
    if (!(dens > 0.0)) {
      std::ostringstream os;
      os << "density 1 + theta a(t) = " << dens << " at t=" << t;
      throw ValidityError(os.str(), dens);
    }
    sum.add(std::log1p(model.theta * a) - c.e0n);
  }
  const double n = static_cast<double>(sample.size());
  return sum.value() / (std::sqrt(n) * c.sigma0n);
}

namespace {

constexpr double kZ90 = 1.6448536269514722;

// Lattice-valued statistics (two-point Y) put mass exactly on the threshold;
// the closed event {sum Y >= n x} is resolved with this relative slack.
double hit_threshold(const TailQuery& q) {
  const double thr = static_cast<double>(q.n) * q.x;
  return thr - 1e-9 * std::max(1.0, std::fabs(thr));
}

std::uint64_t derive_key(std::uint64_t key, std::uint64_t salt) {
  std::uint64_t s = key ^ (salt * 0x9E3779B97F4A7C15ULL);
  return splitmix64(s);
}

// Runs replications 0..budget-1, each from its own substream, on `workers`
// threads. Output order depends only on the replication index.
std::vector<double> run_replications(
    const TailQuery& q, const std::function<double(Stream&)>& replicate) {
  const auto budget = static_cast<std::size_t>(q.mc_budget);
  std::vector<double> log_w(budget);
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(q.workers, budget));
  const auto body = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Stream stream(q.stream_key, i);
      log_w[i] = replicate(stream);
    }
  };
  if (workers <= 1) {
    body(0, budget);
    return log_w;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = budget * w / workers;
    const std::size_t end = budget * (w + 1) / workers;
    pool.emplace_back(body, begin, end);
  }
  for (auto& th : pool) th.join();
  return log_w;
}

TailEstimate summarize(const TailQuery& q, std::string estimator,
                       const std::vector<double>& log_w) {
  TailEstimate e;
  e.estimator = std::move(estimator);
  e.replications = q.mc_budget;
  const double budget = static_cast<double>(q.mc_budget);
  const double nx2 = q.n_x2();

  double hi = -numeric::kInf;
  for (double v : log_w) {
    if (v != -numeric::kInf) {
      ++e.hits;
      hi = std::max(hi, v);
    }
  }
  if (e.hits == 0) {
    e.p_hat = 0.0;
    e.std_err = 0.0;
    e.log_p = -numeric::kInf;
    e.rate = numeric::kInf;
    e.ci_lo = md_rate(std::log(3.0 / budget), static_cast<double>(q.n), q.x);
    e.ci_hi = numeric::kInf;
    e.n_effective = 0.0;
    e.budget_limited = true;
    e.degenerate_weights = true;
    return e;
  }

  numeric::KahanSum s1;
  numeric::KahanSum s2;
  for (double v : log_w) {
    if (v == -numeric::kInf) continue;
    const double z = std::exp(v - hi);
    s1.add(z);
    s2.add(z * z);
  }
  const double S1 = s1.value();
  const double S2 = s2.value();
  e.log_p = hi + std::log(S1) - std::log(budget);
  e.p_hat = std::exp(e.log_p);
  // Relative variance of the per-replication weight.
  double rel_var = 0.0;
  if (q.mc_budget > 1) {
    rel_var = std::max(0.0, (S2 * budget / (S1 * S1) - 1.0) * budget / (budget - 1.0));
  }
  const double rel_se = std::sqrt(rel_var / budget);
  e.std_err = e.p_hat * rel_se;
  e.n_effective = S1 * S1 / S2;
  e.degenerate_weights = e.n_effective < 10.0;
  e.interval_clamped = (e.p_hat - 3.0 * e.std_err < 0.0) ||
                       (e.p_hat + 3.0 * e.std_err > 1.0);
  if (e.p_hat > 1.0) {
    e.p_hat = 1.0;
    e.log_p = 0.0;
  }
  e.rate = -e.log_p / nx2;
  const double log_hi = e.log_p + std::log1p(kZ90 * rel_se);
  e.ci_lo = -std::min(log_hi, 0.0) / nx2;
  e.ci_hi = kZ90 * rel_se < 1.0 ? -(e.log_p + std::log1p(-kZ90 * rel_se)) / nx2
                                : numeric::kInf;
  return e;
}

}  // namespace

TailEstimate direct_mc_tail(const TailQuery& query) {
  query.validate();
  if (query.mc_budget < 1000) {
    throw ParameterError("direct Monte Carlo needs a budget of at least 1000");
  }
  const AlternativeModel& model = query.model;
  const NormalizingConstants& c = query.constants;
  const std::int64_t n = query.n;
  const double thr = hit_threshold(query);
  const auto log_w = run_replications(query, [&](Stream& s) {
    numeric::KahanSum sum;
    for (std::int64_t i = 0; i < n; ++i) {
      sum.add(standardized_llr(model, c, s.uniform()));
    }
    return sum.value() >= thr ? 0.0 : -numeric::kInf;
  });
  return summarize(query, "direct", log_w);
}

TailEstimate is_tail(const TailQuery& query, const ExponentialTilt& tilt) {
  query.validate();
  const AlternativeModel& model = query.model;
  const NormalizingConstants& c = query.constants;
  const std::int64_t n = query.n;
  const double thr = hit_threshold(query);
  const double lambda = tilt.lambda();
  const double n_log_phi = static_cast<double>(n) * tilt.log_phi();
  const auto log_w = run_replications(query, [&](Stream& s) {
    numeric::KahanSum sum;
    for (std::int64_t i = 0; i < n; ++i) {
      sum.add(standardized_llr(model, c, tilt.draw(s)));
    }
    const double total = sum.value();
    return total >= thr ? n_log_phi - lambda * total : -numeric::kInf;
  });
  return summarize(query, "is", log_w);
}

TailEstimate is_tail(const TailQuery& query, const IsOptions& options) {
  query.validate();
  double lambda = query.x;
  if (options.lambda) {
    lambda = *options.lambda;
  } else if (options.exact_tilt) {
    lambda = solve_tilt(query.model, query.constants, std::max(query.x, 0.0),
                        1e-10, options.spec);
  }
  const ExponentialTilt tilt = build_tilt(query.model, query.constants, lambda,
                                          options.grid_size, options.spec);
  return is_tail(query, tilt);
}

TailEstimate counterexample_is_tail(const TailQuery& query,
                                    const CounterexampleTilt& ct) {
  query.validate();
  require_consistent(ct, query.model);
  const AlternativeModel& model = query.model;
  const NormalizingConstants& c = query.constants;
  const std::int64_t n = query.n;
  const double thr = hit_threshold(query);
  const auto log_w = run_replications(query, [&](Stream& s) {
    numeric::KahanSum sum;
    numeric::KahanSum log_g;
    for (std::int64_t i = 0; i < n; ++i) {
      const double t = ct.draw(s);
      sum.add(standardized_llr(model, c, t));
      log_g.add(ct.log_density(t));
    }
    return sum.value() >= thr ? -log_g.value() : -numeric::kInf;
  });
  return summarize(query, "counterexample", log_w);
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::thm1: return "thm1";
    case Regime::corollary: return "corollary";
    case Regime::thm2_upper: return "thm2-upper";
    case Regime::thm3: return "thm3";
    case Regime::undecided: return "undecided";
  }
  return "undecided";
}

Regime classify_point(const Direction& dir, double theta, double x,
                      double sigma0n) {
  if (dir.bounded()) return Regime::thm1;
  if (x / theta < 1.0 / 3.0 && x < sigma0n / 3.0) return Regime::corollary;
  if (x < sigma0n) return Regime::thm2_upper;
  return Regime::undecided;
}

bool thm3_conditions_hold(double r, double q, std::span<const double> thetas,
                          std::span<const double> xs) {
  if (!(q > 0.0 && q < r) || thetas.size() != xs.size() || xs.empty()) {
    return false;
  }
  double prev_growth = -numeric::kInf;
  double prev_decay = numeric::kInf;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double growth = xs[i] / std::pow(thetas[i], q);
    const double decay = std::pow(xs[i], (r - q) / q) * std::fabs(std::log(thetas[i]));
    if (!(growth > prev_growth) || !(decay < prev_decay)) return false;
    prev_growth = growth;
    prev_decay = decay;
  }
  return prev_growth > 1.0 && prev_decay < 1.0;
}

std::string_view to_string(RatePreset p) {
  switch (p) {
    case RatePreset::automatic: return "auto";
    case RatePreset::thm1: return "thm1";
    case RatePreset::corollary: return "corollary";
    case RatePreset::thm3: return "thm3";
    case RatePreset::undecided: return "undecided";
  }
  return "auto";
}

RatePreset parse_preset(std::string_view text) {
  if (text == "auto") return RatePreset::automatic;
  if (text == "thm1") return RatePreset::thm1;
  if (text == "corollary") return RatePreset::corollary;
  if (text == "thm3") return RatePreset::thm3;
  if (text == "undecided") return RatePreset::undecided;
  throw ConfigError("unknown regime preset '" + std::string(text) +
                    "' (auto, thm1, corollary, thm3, undecided)");
}

std::string_view to_string(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::direct: return "direct";
    case EstimatorKind::importance: return "is";
    case EstimatorKind::both: return "both";
  }
  return "is";
}

EstimatorKind parse_estimator(std::string_view text) {
  if (text == "direct") return EstimatorKind::direct;
  if (text == "is") return EstimatorKind::importance;
  if (text == "both") return EstimatorKind::both;
  throw ConfigError("unknown estimator '" + std::string(text) +
                    "' (direct, is, both)");
}

namespace {

struct GridValues {
  std::vector<double> thetas;
  std::vector<double> xs;
};

GridValues evaluate_schedules(const XRule& x_rule, const Schedule& theta_rule,
                              std::span<const std::int64_t> n_grid) {
  GridValues g;
  for (std::int64_t n : n_grid) {
    const double nd = static_cast<double>(n);
    const double theta = theta_rule(nd);
    const double x = x_rule.relative_to_theta ? x_rule.schedule(nd) * theta
                                              : x_rule.schedule(nd);
    g.thetas.push_back(theta);
    g.xs.push_back(x);
  }
  return g;
}

std::optional<double> find_thm3_q(double r, const GridValues& g) {
  for (int i = 1; i < 100; ++i) {
    const double q = r * i / 100.0;
    if (thm3_conditions_hold(r, q, g.thetas, g.xs)) return q;
  }
  return std::nullopt;
}

}  // namespace

void validate_rate_schedule(const Direction& dir, const XRule& x_rule,
                            const Schedule& theta_rule,
                            std::span<const std::int64_t> n_grid,
                            RatePreset preset) {
  if (n_grid.empty()) throw ConfigError("n grid is empty");
  const GridValues g = evaluate_schedules(x_rule, theta_rule, n_grid);
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (!(g.xs[i] > 0.0) || !std::isfinite(g.xs[i])) {
      throw ConfigError("x schedule must be positive at every grid point");
    }
    if (!(g.thetas[i] > 0.0) || !std::isfinite(g.thetas[i])) {
      throw ConfigError("theta schedule must be positive at every grid point");
    }
  }

  RatePreset effective = preset;
  if (preset == RatePreset::automatic && !dir.bounded() && x_rule.relative_to_theta) {
    effective = RatePreset::corollary;
  }
  switch (effective) {
    case RatePreset::thm1:
      if (!dir.bounded()) {
        throw ConfigError("Theorem 1 preset requires a bounded direction");
      }
      break;
    case RatePreset::corollary: {
      if (dir.bounded()) {
        throw ConfigError("Corollary preset applies to unbounded directions");
      }
      for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (!(g.xs[i] / g.thetas[i] < 1.0 / 3.0)) {
          throw ConfigError("Corollary preset requires ratio x/theta < 1/3, got " +
                            format_double(g.xs[i] / g.thetas[i]));
        }
      }
      for (std::size_t i = 1; i < n_grid.size(); ++i) {
        const double a = static_cast<double>(n_grid[i - 1]) * g.thetas[i - 1] * g.thetas[i - 1];
        const double b = static_cast<double>(n_grid[i]) * g.thetas[i] * g.thetas[i];
        if (!(g.thetas[i] < g.thetas[i - 1]) || !(b > a)) {
          throw ConfigError("Corollary preset requires theta_n -> 0 with n theta_n^2 -> inf");
        }
      }
      break;
    }
    case RatePreset::thm3: {
      const auto& sing = dir.singularity();
      if (!sing || !dir.name().starts_with("ar:")) {
        throw ConfigError("Theorem 3 preset requires an a_r direction");
      }
      if (!find_thm3_q(sing->exponent, g)) {
        throw ConfigError("Theorem 3 preset requires x/theta^q -> inf and "
                          "x^((r-q)/q) log theta -> 0 for some q < r along the grid");
      }
      break;
    }
    case RatePreset::automatic:
    case RatePreset::undecided:
      break;
  }
  // preset conditions are reported first; they name the more specific problem
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    const double nx2_prev = static_cast<double>(n_grid[i - 1]) * g.xs[i - 1] * g.xs[i - 1];
    const double nx2 = static_cast<double>(n_grid[i]) * g.xs[i] * g.xs[i];
    if (!(g.xs[i] < g.xs[i - 1])) {
      throw ConfigError("x_n must decrease along the n grid (x_n -> 0)");
    }
    if (!(nx2 > nx2_prev)) {
      throw ConfigError("n x_n^2 must increase along the n grid (n x_n^2 -> inf)");
    }
  }
}

std::vector<RatePoint> md_rate_curve(const Direction& dir, const XRule& x_rule,
                                     const Schedule& theta_rule,
                                     std::span<const std::int64_t> n_grid,
                                     std::int64_t budget,
                                     const RateCurveOptions& options) {
  validate_rate_schedule(dir, x_rule, theta_rule, n_grid, options.preset);
  const GridValues g = evaluate_schedules(x_rule, theta_rule, n_grid);
  std::optional<double> thm3_q;
  if (dir.singularity() && dir.name().starts_with("ar:") && n_grid.size() > 1) {
    thm3_q = find_thm3_q(dir.singularity()->exponent, g);
  }

  std::vector<RatePoint> out;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    RatePoint pt;
    pt.n = n_grid[i];
    pt.theta = g.thetas[i];
    pt.x = g.xs[i];
    const AlternativeModel model = validate_model(dir, pt.theta);
    pt.constants = compute_constants(model, options.spec);
    pt.regime = classify_point(dir, pt.theta, pt.x, pt.constants.sigma0n);
    if (options.preset == RatePreset::undecided) {
      pt.regime = Regime::undecided;
    } else if (pt.regime == Regime::undecided && thm3_q) {
      pt.regime = Regime::thm3;
    }

    TailQuery q{model, pt.constants};
    q.n = pt.n;
    q.x = pt.x;
    q.mc_budget = budget;
    q.workers = options.workers;
    const std::uint64_t point_key =
        derive_key(options.stream_key, static_cast<std::uint64_t>(pt.n));

    if (options.estimator != EstimatorKind::importance) {
      q.stream_key = derive_key(point_key, 1);
      pt.estimates.push_back(direct_mc_tail(q));
    }
    if (options.estimator != EstimatorKind::direct) {
      q.stream_key = derive_key(point_key, 2);
      IsOptions is;
      is.exact_tilt = options.exact_tilt;
      is.grid_size = options.grid_size;
      is.spec = options.spec;
      pt.estimates.push_back(is_tail(q, is));
    }
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace npmd
