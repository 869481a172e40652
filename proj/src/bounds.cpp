#include "npmd/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "npmd/errors.hpp"
#include "npmd/numeric.hpp"
#include "npmd/schedule.hpp"

namespace npmd {

using numeric::kInf;

double h_function(double y) {
  if (!(y > -1.0)) {
    std::ostringstream os;
    os << "h(y) needs y > -1, got " << y;
    throw DomainError(os.str());
  }
  return numeric::h_unchecked(y);
}

LogInequalityReport check_log_inequality(double epsilon,
                                         std::span<const double> grid) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ParameterError("log inequality needs 0 < epsilon < 1");
  }
  LogInequalityReport rep;
  rep.epsilon = epsilon;
  rep.points = grid.size();
  rep.min_lower_slack = kInf;
  rep.min_upper_slack = kInf;
  const double cl = (3.0 - epsilon) / (6.0 * (1.0 - epsilon));
  const double cu = (3.0 - 2.0 * epsilon) / 6.0;
  for (double y : grid) {
    if (std::fabs(y) > epsilon) {
      throw ParameterError("grid point outside [-epsilon, epsilon]");
    }
    const double l = std::log1p(y);
    const double lo_slack = l - (y - cl * y * y);
    const double up_slack = (y - cu * y * y) - l;
    // rounding in log1p is ~1e-16 |y|
    const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(y);
    if (lo_slack < -tol || up_slack < -tol) ++rep.violations;
    if (std::min(lo_slack, up_slack) < std::min(rep.min_lower_slack, rep.min_upper_slack)) {
      rep.worst_y = y;
    }
    rep.min_lower_slack = std::min(rep.min_lower_slack, lo_slack);
    rep.min_upper_slack = std::min(rep.min_upper_slack, up_slack);
  }
  return rep;
}

LogInequalityReport check_log_inequality(double epsilon, std::size_t n) {
  if (n < 2) throw ParameterError("log inequality grid needs >= 2 points");
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = -epsilon + 2.0 * epsilon * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  grid.back() = epsilon;
  return check_log_inequality(epsilon, grid);
}

double bernstein_bound(double n, double variance, double sup_bound, double s) {
  return 2.0 * std::exp(-s * s / (2.0 * (n * variance + sup_bound * s / 3.0)));
}

double cantelli_bound(double n, double variance, double deviation) {
  if (!(deviation >= 0.0)) throw ParameterError("Cantelli needs deviation >= 0");
  if (!(variance > 0.0)) throw ParameterError("Cantelli needs variance > 0");
  const double nv = n * variance;
  return nv / (nv + deviation * deviation);
}

double chernoff_log_upper(const AlternativeModel& model,
                          const NormalizingConstants& c, double n, double x,
                          const QuadratureSpec& spec) {
  if (x == 0.0) return 0.0;
  if (!(x < mgf_domain_sup(model, c))) {
    std::ostringstream os;
    os << "Chernoff bound unavailable: lambda=" << x
       << " is outside the mgf domain (sup " << mgf_domain_sup(model, c) << ")";
    throw DomainError(os.str());
  }
  return n * (log_mgf(model, c, x, spec) - x * x);
}

double chernoff_upper(const AlternativeModel& model,
                      const NormalizingConstants& c, double n, double x,
                      const QuadratureSpec& spec) {
  return std::exp(chernoff_log_upper(model, c, n, x, spec));
}

DiscreteDistribution::DiscreteDistribution(std::vector<Atom> atoms)
    : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw ParameterError("discrete distribution has no atoms");
  numeric::KahanSum total;
  for (const auto& [v, p] : atoms_) {
    if (!std::isfinite(v)) throw ParameterError("atom value must be finite");
    if (!(p > 0.0)) throw ParameterError("atom probabilities must be positive");
    total.add(p);
  }
  if (std::fabs(total.value() - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "atom probabilities sum to " << total.value() << ", not 1";
    throw ParameterError(os.str());
  }
  std::sort(atoms_.begin(), atoms_.end());
  for (std::size_t i = 1; i < atoms_.size(); ++i) {
    if (atoms_[i].first == atoms_[i - 1].first) {
      throw ParameterError("atom values must be distinct");
    }
  }
}

double DiscreteDistribution::mean() const {
  numeric::KahanSum s;
  for (const auto& [v, p] : atoms_) s.add(v * p);
  return s.value();
}

double DiscreteDistribution::variance() const {
  const double m = mean();
  numeric::KahanSum s;
  for (const auto& [v, p] : atoms_) s.add((v - m) * (v - m) * p);
  return s.value();
}

DiscreteDistribution DiscreteDistribution::tilt(double lambda) const {
  std::vector<double> logs;
  for (const auto& [v, p] : atoms_) logs.push_back(std::log(p) + lambda * v);
  const double z = numeric::log_sum_exp(logs);
  std::vector<Atom> out;
  numeric::KahanSum total;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    out.emplace_back(atoms_[i].first, std::exp(logs[i] - z));
    total.add(out.back().second);
  }
  // renormalise the rounding residue
  for (auto& a : out) a.second /= total.value();
  return DiscreteDistribution(std::move(out));
}

double kl_divergence(const DiscreteDistribution& q,
                     const DiscreteDistribution& p) {
  numeric::KahanSum s;
  for (const auto& [v, qp] : q.atoms()) {
    const auto it = std::find_if(p.atoms().begin(), p.atoms().end(),
                                 [v](const auto& a) { return a.first == v; });
    if (it == p.atoms().end()) {
      std::ostringstream os;
      os << "absolute continuity violated: Q has an atom at " << v
         << " where P has none";
      throw ParameterError(os.str());
    }
    s.add(qp * std::log(qp / it->second));
  }
  return std::max(0.0, s.value());
}

std::vector<DiscreteDistribution::Atom> sum_distribution(
    const DiscreteDistribution& p, int n) {
  if (n < 1) throw ParameterError("convolution needs n >= 1");
  const double k = static_cast<double>(p.atoms().size());
  std::vector<DiscreteDistribution::Atom> cur{{0.0, 1.0}};
  for (int step = 0; step < n; ++step) {
    if (k * n * static_cast<double>(cur.size()) > 1e7) {
      throw ParameterError("exact convolution exceeds the cost cap "
                           "(atoms * n * distinct sums > 1e7)");
    }
    std::vector<DiscreteDistribution::Atom> next;
    next.reserve(cur.size() * p.atoms().size());
    for (const auto& [s, ps] : cur) {
      for (const auto& [v, pv] : p.atoms()) next.emplace_back(s + v, ps * pv);
    }
    std::sort(next.begin(), next.end());
    cur.clear();
    for (const auto& a : next) {
      // sums that differ only by rounding are the same lattice point
      if (!cur.empty() &&
          a.first - cur.back().first <= 1e-12 * std::max(1.0, std::fabs(a.first))) {
        cur.back().second += a.second;
      } else {
        cur.push_back(a);
      }
    }
  }
  return cur;
}

MogulskiiCheck mogulskii_lower(const DiscreteDistribution& p,
                               const DiscreteDistribution& q, double x,
                               double M, int n) {
  if (!(M > 0.0)) throw ParameterError("Mogulskii bound needs M > 0");
  MogulskiiCheck out;
  out.kl = kl_divergence(q, p);
  if (x == -kInf) {
    out.p_event = 1.0;
    out.p_miss = 0.0;
  } else {
    const double thr = n * x - 1e-9 * std::max(1.0, std::fabs(n * x));
    numeric::KahanSum ev;
    for (const auto& [s, ps] : sum_distribution(p, n)) {
      if (s >= thr) ev.add(ps);
    }
    numeric::KahanSum miss;
    for (const auto& [s, qs] : sum_distribution(q, n)) {
      if (s < thr) miss.add(qs);
    }
    out.p_event = std::min(1.0, ev.value());
    out.p_miss = std::min(1.0, miss.value());
  }
  out.lhs = out.p_event * (-std::expm1(-M)) + std::exp(-M);
  out.rhs = std::exp(-n * out.kl - M * out.p_miss);
  out.holds = out.lhs >= out.rhs;
  return out;
}

std::string to_string(const MRule& rule) {
  switch (rule.kind) {
    case MRule::Kind::proof: return "proof";
    case MRule::Kind::optimized: return "optimized";
    case MRule::Kind::multiplier: return format_double(rule.factor) + "nx2";
  }
  return "proof";
}

MRule parse_m_rule(std::string_view text) {
  if (text == "proof") return MRule::proof();
  if (text == "optimized") return MRule::optimized();
  if (text.ends_with("nx2")) {
    const std::string num(text.substr(0, text.size() - 3));
    char* end = nullptr;
    const double f = std::strtod(num.c_str(), &end);
    if (!num.empty() && end == num.c_str() + num.size() && f > 0.0 && std::isfinite(f)) {
      return MRule::multiplier(f);
    }
  }
  throw ConfigError("unknown M rule '" + std::string(text) +
                    "' (proof, optimized, or <factor>nx2)");
}

namespace {

struct UpperParts {
  double M = 0.0;
  double rate = kInf;
};

// upper_rate from the Mogulskii lower bound with auxiliary KL D and miss
// bound p; default_factor gives the proof's M in units of n x^2.
UpperParts mogulskii_upper_rate(double n, double x, double D, double p,
                                const MRule& rule, double default_factor) {
  const double nx2 = n * x * x;
  const double nD = n * D;
  UpperParts u;
  switch (rule.kind) {
    case MRule::Kind::proof: u.M = default_factor * nx2; break;
    case MRule::Kind::multiplier: u.M = rule.factor * nx2; break;
    case MRule::Kind::optimized: {
      const double pc = std::max(p, 1e-300);
      u.M = p < 1.0 ? (nD - std::log(pc)) / (1.0 - p) : default_factor * nx2;
      break;
    }
  }
  // P(A) >= (e^{-nD - Mp} - e^{-M}) / (1 - e^{-M})
  const double gap = u.M * (1.0 - p) - nD;
  if (!(gap > 0.0)) {
    u.rate = kInf;
    return u;
  }
  const double overshoot = -std::log(-std::expm1(-gap));
  const double norm = std::fabs(std::log(-std::expm1(-u.M)));
  u.rate = (nD + u.M * p + norm + overshoot) / nx2;
  return u;
}

void check_point(double n, double x) {
  if (!(n > 0.0) || !std::isfinite(n)) throw ParameterError("bracket needs finite n > 0");
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw ParameterError("bracket needs x > 0 (x = 0 makes both rates degenerate)");
  }
}

void fill_lower(RateBracket& b, const AlternativeModel& model,
                const NormalizingConstants& c, const QuadratureSpec& spec) {
  if (b.x < mgf_domain_sup(model, c)) {
    b.lower_rate = std::max(0.0, 1.0 - log_mgf(model, c, b.x, spec) / (b.x * b.x));
    b.chernoff_available = true;
  } else {
    b.lower_rate = 0.0;
    b.chernoff_available = false;
  }
}

struct TiltEval {
  double lambda = 0.0;
  double D = 0.0;
  double p = 1.0;
  UpperParts u;
};

TiltEval eval_tilt(const AlternativeModel& model, const NormalizingConstants& c,
                   double n, double x, double lambda, const MRule& rule,
                   const QuadratureSpec& spec) {
  TiltEval e;
  e.lambda = lambda;
  const double m = tilted_mean(model, c, lambda, spec);
  const double v = tilted_variance(model, c, lambda, spec);
  e.D = kl_exponential_tilt(model, c, lambda, spec);
  e.p = m > x ? cantelli_bound(n, v, n * (m - x)) : 1.0;
  e.u = mogulskii_upper_rate(n, x, e.D, e.p, rule, 2.0);
  return e;
}

RateBracket tilt_bracket(const AlternativeModel& model,
                         const NormalizingConstants& c, double n, double x,
                         const MRule& rule, const QuadratureSpec& spec) {
  RateBracket b;
  b.n = n;
  b.x = x;
  b.theta = model.theta;
  b.path = "tilt";
  fill_lower(b, model, c, spec);

  const double lam0 = solve_tilt(model, c, x, 1e-12, spec);
  const double cap = std::min(0.999 * mgf_domain_sup(model, c), 8.0 * lam0 + 1.0);
  // coarse log scan of lambda = lam0 (1 + eps), then golden refinement
  TiltEval best;
  best.u.rate = kInf;
  std::vector<double> lams;
  for (int i = 0; i <= 80; ++i) {
    const double eps = std::pow(10.0, -6.0 + 7.0 * i / 80.0);
    const double lam = lam0 * (1.0 + eps);
    if (lam >= cap) break;
    lams.push_back(lam);
  }
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < lams.size(); ++i) {
    const TiltEval e = eval_tilt(model, c, n, x, lams[i], rule, spec);
    if (e.u.rate < best.u.rate) {
      best = e;
      best_i = i;
    }
  }
  if (std::isfinite(best.u.rate)) {
    double lo = lams[best_i > 0 ? best_i - 1 : 0];
    double hi = lams[std::min(best_i + 1, lams.size() - 1)];
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60 && hi - lo > 1e-12 * hi; ++it) {
      const double a = hi - g * (hi - lo);
      const double bb = lo + g * (hi - lo);
      const TiltEval ea = eval_tilt(model, c, n, x, a, rule, spec);
      const TiltEval eb = eval_tilt(model, c, n, x, bb, rule, spec);
      if (ea.u.rate < best.u.rate) best = ea;
      if (eb.u.rate < best.u.rate) best = eb;
      if (ea.u.rate < eb.u.rate) hi = bb; else lo = a;
    }
  } else if (!lams.empty()) {
    best = eval_tilt(model, c, n, x, lams.back(), rule, spec);
  }
  b.lambda = best.lambda;
  b.kl = best.D;
  b.p_n_bound = best.p;
  b.M = best.u.M;
  b.upper_rate = best.u.rate;
  return b;
}

}  // namespace

RateBracket certified_rate_bracket(const AlternativeModel& model,
                                   const NormalizingConstants& c,
                                   const std::optional<CounterexampleTilt>& ct,
                                   double n, double x, const MRule& rule,
                                   const QuadratureSpec& spec) {
  check_point(n, x);
  if (!ct) return tilt_bracket(model, c, n, x, rule, spec);

  require_consistent(*ct, model);
  RateBracket b;
  b.n = n;
  b.x = x;
  b.theta = model.theta;
  b.path = "counterexample";
  b.q = ct->q;
  fill_lower(b, model, c, spec);
  const CounterexampleMoments mom = counterexample_moments(*ct, model, c, spec);
  b.kl = counterexample_kl(*ct);
  b.p_n_bound = mom.mean > x && mom.variance > 0.0
                    ? cantelli_bound(n, mom.variance, n * (mom.mean - x))
                    : 1.0;
  const UpperParts u = mogulskii_upper_rate(n, x, b.kl, b.p_n_bound, rule, 1.0);
  b.M = u.M;
  b.upper_rate = u.rate;
  return b;
}

RateBracket counterexample_bracket(const AlternativeModel& model,
                                   const NormalizingConstants& c, double n,
                                   double x, std::optional<double> q,
                                   const MRule& rule, const QuadratureSpec& spec) {
  check_point(n, x);
  const auto& sing = model.direction.singularity();
  if (!sing || !model.direction.name().starts_with("ar:")) {
    throw ParameterError("counterexample bracket needs an a_r direction");
  }
  const double r = sing->exponent;
  if (q) {
    return certified_rate_bracket(model, c, make_counterexample(r, *q, model.theta, x),
                                  n, x, rule, spec);
  }
  std::optional<RateBracket> best;
  const auto consider = [&](double qq) {
    try {
      RateBracket b = certified_rate_bracket(
          model, c, make_counterexample(r, qq, model.theta, x), n, x, rule, spec);
      if (!best || b.upper_rate < best->upper_rate) best = b;
    } catch (const ParameterError&) {
      // law not constructible at this q
    }
  };
  constexpr int kGrid = 200;
  for (int i = 1; i < kGrid; ++i) consider(r * i / kGrid);
  if (best && std::isfinite(best->upper_rate)) {
    const double step = r / kGrid;
    const double centre = best->q;
    for (int i = -10; i <= 10; ++i) {
      const double qq = centre + step * i / 10.0;
      if (qq > 0.0 && qq < r) consider(qq);
    }
  }
  if (!best) {
    throw ParameterError("no counterexample law is valid at this (theta, x)");
  }
  return *best;
}

std::vector<Thm3Point> thm3_schedule(int k_lo, int k_hi, double theta_power) {
  if (k_lo > k_hi) throw ParameterError("thm3 schedule needs k_lo <= k_hi");
  if (!(theta_power > 0.0)) throw ParameterError("theta power must be positive");
  std::vector<Thm3Point> out;
  for (int k = k_lo; k <= k_hi; ++k) {
    Thm3Point p;
    p.k = k;
    p.x = std::pow(10.0, -k / 2.0);
    p.theta = std::pow(p.x, theta_power);
    p.n = std::pow(p.theta, -4.0);
    out.push_back(p);
  }
  return out;
}

}  // namespace npmd
