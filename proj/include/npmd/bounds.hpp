#ifndef NPMD_BOUNDS_HPP
#define NPMD_BOUNDS_HPP

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "npmd/directions.hpp"
#include "npmd/quadrature.hpp"
#include "npmd/tilting.hpp"

namespace npmd {

/// h(y) = 2 (y - log(1+y)) / y^2, h(0) = 1. DomainError for y <= -1.
double h_function(double y);

struct LogInequalityReport {
  double epsilon = 0.0;
  std::size_t points = 0;
  // min over the grid of log(1+y) - lower(y) and upper(y) - log(1+y)
  double min_lower_slack = 0.0;
  double min_upper_slack = 0.0;
  double worst_y = 0.0;
  std::size_t violations = 0;
  bool holds() const noexcept { return violations == 0; }
};

/// y - (3-eps)/(6(1-eps)) y^2 <= log(1+y) <= y - (3-2eps)/6 y^2 on the grid.
/// Grid points outside [-eps, eps] are rejected with ParameterError.
LogInequalityReport check_log_inequality(double epsilon,
                                         std::span<const double> grid);
/// Same on n equally spaced points of [-eps, eps].
LogInequalityReport check_log_inequality(double epsilon, std::size_t n);

/// 2 exp(-s^2 / (2 (n v + B s / 3))). Not clamped to 1.
double bernstein_bound(double n, double variance, double sup_bound, double s);

/// n v / (n v + d^2).
double cantelli_bound(double n, double variance, double deviation);

/// log of exp(-n x^2) phi(x)^n. DomainError beyond the mgf domain.
double chernoff_log_upper(const AlternativeModel& model,
                          const NormalizingConstants& c, double n, double x,
                          const QuadratureSpec& spec = {});
double chernoff_upper(const AlternativeModel& model,
                      const NormalizingConstants& c, double n, double x,
                      const QuadratureSpec& spec = {});

/// Finite law with distinct atoms.
class DiscreteDistribution {
 public:
  using Atom = std::pair<double, double>;  // (value, probability)

  // ParameterError unless probabilities are positive and sum to 1 within
  // 1e-12 and values are finite and distinct.
  explicit DiscreteDistribution(std::vector<Atom> atoms);

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  double mean() const;
  double variance() const;
  // Exponential tilt: probabilities proportional to p e^(lambda v).
  DiscreteDistribution tilt(double lambda) const;

 private:
  std::vector<Atom> atoms_;
};

/// D(Q || P); ParameterError when Q is not absolutely continuous w.r.t. P.
double kl_divergence(const DiscreteDistribution& q,
                     const DiscreteDistribution& p);

/// Exact law of the sum of n iid draws, as sorted (sum, probability) pairs.
/// ParameterError when atoms * n * distinct_sums would exceed 1e7.
std::vector<DiscreteDistribution::Atom> sum_distribution(
    const DiscreteDistribution& p, int n);

struct MogulskiiCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double p_event = 0.0;  // P(mean >= x)
  double p_miss = 0.0;   // Q(mean < x)
  double kl = 0.0;
  bool holds = false;
};

/// Both sides of Mogulskii's inequality for A = [x, inf):
///   P(A)(1 - e^-M) + e^-M >= exp(-n D(Q||P) - M Q(mean < x)).
/// x = -inf means A is the whole line.
MogulskiiCheck mogulskii_lower(const DiscreteDistribution& p,
                               const DiscreteDistribution& q, double x,
                               double M, int n);

/// How the free parameter M of the lower bound is chosen.
struct MRule {
  enum class Kind { proof, optimized, multiplier };
  Kind kind = Kind::proof;
  double factor = 2.0;  // M = factor n x^2 for Kind::multiplier

  static MRule proof() { return {Kind::proof, 0.0}; }
  static MRule optimized() { return {Kind::optimized, 0.0}; }
  static MRule multiplier(double f) { return {Kind::multiplier, f}; }
};
std::string to_string(const MRule& rule);
MRule parse_m_rule(std::string_view text);

struct RateBracket {
  double n = 0.0;  // real-valued; may be astronomically large
  double x = 0.0;
  double theta = 0.0;
  double kl = 0.0;         // D of the auxiliary law
  double p_n_bound = 0.0;  // Cantelli bound on the auxiliary miss probability
  double M = 0.0;
  double upper_rate = 0.0;  // from the Mogulskii lower bound on p
  double lower_rate = 0.0;  // from the Chernoff upper bound on p
  bool chernoff_available = true;
  std::string path;  // "tilt" or "counterexample"
  double lambda = 0.0;  // tilt path
  double q = 0.0;       // counterexample path
};

/// Rate bracket from analytic bounds only. Without ct the exponential tilt is
/// used (lambda chosen to minimise upper_rate); with ct the counterexample
/// law. Default M is 2 n x^2 on the tilt path and n x^2 on the counterexample
/// path. ParameterError for x <= 0 or n <= 0.
RateBracket certified_rate_bracket(const AlternativeModel& model,
                                   const NormalizingConstants& c,
                                   const std::optional<CounterexampleTilt>& ct,
                                   double n, double x,
                                   const MRule& rule = MRule::proof(),
                                   const QuadratureSpec& spec = {});

/// Counterexample-path bracket with q chosen on a grid in (0, r) to minimise
/// upper_rate. If q is given only that value is used.
RateBracket counterexample_bracket(const AlternativeModel& model,
                                   const NormalizingConstants& c, double n,
                                   double x, std::optional<double> q = {},
                                   const MRule& rule = MRule::proof(),
                                   const QuadratureSpec& spec = {});

/// Grid point of the rate-0 schedule x = 10^(-k/2), theta = x^p, n = theta^-4.
struct Thm3Point {
  int k = 0;
  double x = 0.0;
  double theta = 0.0;
  double n = 0.0;
};
std::vector<Thm3Point> thm3_schedule(int k_lo, int k_hi, double theta_power = 5.0);

}  // namespace npmd

#endif  // NPMD_BOUNDS_HPP
