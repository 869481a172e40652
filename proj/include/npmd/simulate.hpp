#ifndef NPMD_SIMULATE_HPP
#define NPMD_SIMULATE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "npmd/directions.hpp"
#include "npmd/quadrature.hpp"
#include "npmd/schedule.hpp"
#include "npmd/tilting.hpp"

namespace npmd {

/// P0^n(V_n >= sqrt(n) x) at one (n, x).
struct TailQuery {
  AlternativeModel model;
  NormalizingConstants constants;
  std::int64_t n = 1;
  double x = 0.0;
  std::int64_t mc_budget = 1000;
  std::uint64_t stream_key = 0;
  unsigned workers = 1;

  // Throws ParameterError on n < 1, budget < 1, non-finite x or
  // x > 10 sigma0n.
  void validate() const;
  double n_x2() const { return static_cast<double>(n) * x * x; }
};

struct TailEstimate {
  std::string estimator;
  double p_hat = 0.0;
  double std_err = 0.0;
  double log_p = 0.0;
  double rate = 0.0;  // -log_p / (n x^2)
  // 90% interval for the rate from p_hat +- 1.645 std_err; for p_hat = 0 the
  // rule-of-three bound p < 3/budget gives a one-sided interval.
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double n_effective = 0.0;
  std::int64_t hits = 0;
  std::int64_t replications = 0;
  bool budget_limited = false;     // no replication hit the event
  bool interval_clamped = false;   // p_hat +- 3 se leaves [0,1]
  bool degenerate_weights = false; // n_effective < 10
};

/// -log_p / (n x^2).
double md_rate(double log_p, double n, double x);

/// V_n = sum(log(1 + theta a(t_i)) - e0n) / (sqrt(n) sigma0n).
double compute_vn(const AlternativeModel& model, const NormalizingConstants& c,
                  std::span<const double> sample);

/// Crude Monte Carlo: fraction of replications with V_n >= sqrt(n) x.
/// Requires mc_budget >= 1000.
TailEstimate direct_mc_tail(const TailQuery& query);

struct IsOptions {
  // Tilt parameter; default x, or the root of m(lambda) = x when exact_tilt.
  std::optional<double> lambda;
  bool exact_tilt = false;
  std::size_t grid_size = 4096;
  QuadratureSpec spec;
};

/// Importance sampling under the exponential tilt Q_lambda with per-
/// replication weight phi(lambda)^n exp(-lambda sum Y), kept in log space.
TailEstimate is_tail(const TailQuery& query, const IsOptions& options = {});

/// Same estimator with a prebuilt tilt (reused across calls).
TailEstimate is_tail(const TailQuery& query, const ExponentialTilt& tilt);

/// Importance sampling under the counterexample law, weight prod 1/g(X_i).
/// The law must match the model's r and theta; its x is a free tuning
/// parameter.
TailEstimate counterexample_is_tail(const TailQuery& query,
                                    const CounterexampleTilt& ct);

/// Which known result covers a point (advisory).
enum class Regime { thm1, corollary, thm2_upper, thm3, undecided };
std::string_view to_string(Regime r);

/// Per-point classification: bounded direction -> thm1; unbounded with
/// x/theta < 1/3 and x < sigma0n/3 -> corollary; x < sigma0n -> thm2_upper
/// (upper estimate only); otherwise undecided.
Regime classify_point(const Direction& dir, double theta, double x,
                      double sigma0n);

/// Theorem 3 conditions along a grid for a_r and a given q < r: x/theta^q
/// strictly increasing and above 1, x^((r-q)/q) |log theta| strictly
/// decreasing and below 1.
bool thm3_conditions_hold(double r, double q, std::span<const double> thetas,
                          std::span<const double> xs);

enum class RatePreset { automatic, thm1, corollary, thm3, undecided };
std::string_view to_string(RatePreset p);
RatePreset parse_preset(std::string_view text);

enum class EstimatorKind { direct, importance, both };
std::string_view to_string(EstimatorKind e);
EstimatorKind parse_estimator(std::string_view text);

struct XRule {
  Schedule schedule;
  // x = schedule(n) * theta(n) when set, else x = schedule(n).
  bool relative_to_theta = false;
};

struct RateCurveOptions {
  RatePreset preset = RatePreset::automatic;
  EstimatorKind estimator = EstimatorKind::importance;
  std::uint64_t stream_key = 0;
  unsigned workers = 1;
  bool exact_tilt = false;
  std::size_t grid_size = 4096;
  QuadratureSpec spec;
};

struct RatePoint {
  std::int64_t n = 0;
  double x = 0.0;
  double theta = 0.0;
  NormalizingConstants constants;
  Regime regime = Regime::undecided;
  std::vector<TailEstimate> estimates;  // one per estimator run
};

/// Checks the schedule constraints (x decreasing, n x^2 increasing, preset
/// conditions) and throws ConfigError naming the violated condition.
void validate_rate_schedule(const Direction& dir, const XRule& x_rule,
                            const Schedule& theta_rule,
                            std::span<const std::int64_t> n_grid,
                            RatePreset preset);

std::vector<RatePoint> md_rate_curve(const Direction& dir, const XRule& x_rule,
                                     const Schedule& theta_rule,
                                     std::span<const std::int64_t> n_grid,
                                     std::int64_t budget,
                                     const RateCurveOptions& options = {});

}  // namespace npmd

#endif  // NPMD_SIMULATE_HPP
