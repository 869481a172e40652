#ifndef NPMD_TILTING_HPP
#define NPMD_TILTING_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "npmd/directions.hpp"
#include "npmd/quadrature.hpp"
#include "npmd/random.hpp"

namespace npmd {

/// Root of m(lambda) = target_mean with |m - target| <= tol. The bracket
/// starts at (5/6) sigma0n and doubles while m stays below the target,
/// never crossing the mgf boundary. RangeError reports the largest m reached
/// when the target is out of reach.
double solve_tilt(const AlternativeModel& model, const NormalizingConstants& c,
                  double target_mean, double tol = 1e-10,
                  const QuadratureSpec& spec = {});

/// Where a solved tilt falls relative to the analytic bracket
///   x <= lambda <= x (1+eps)(1+eps/8)/(1-eps/4) <= (1+2 eps) x
/// and the a priori bound lambda < 5 sigma0n / 6, for the tilt solving
/// m(lambda) = (1+eps) x.
struct TiltBracketDiagnostic {
  double lambda = 0.0;
  double x = 0.0;
  double epsilon = 0.0;
  double upper = 0.0;  // x (1+eps)(1+eps/8)/(1-eps/4)
  bool above_x = false;
  bool below_upper = false;
  bool below_two_eps = false;
  bool below_five_sixths_sigma = false;
};

TiltBracketDiagnostic check_tilt_bracket(double lambda, double x,
                                         double epsilon, double sigma0n);

/// Exponentially tilted law Q_lambda of t on (0,1): density proportional to
/// exp(lambda Y(t)), realised by a tabulated inverse CDF. Knots are uniform in
/// the substitution variable s with t = s^beta, beta = 1/(1 - r lambda/sigma0n)
/// for a_r, so the density in s stays bounded; between knots s(u) is a
/// monotone cubic (Fritsch-Carlson) interpolant.
class ExponentialTilt {
 public:
  double lambda() const noexcept { return lambda_; }
  const AlternativeModel& model() const noexcept { return model_; }
  const NormalizingConstants& constants() const noexcept { return constants_; }
  double phi() const noexcept { return phi_; }
  double log_phi() const noexcept { return log_phi_; }
  std::size_t grid_size() const noexcept { return cells_; }
  double substitution_power() const noexcept { return beta_; }

  // Knot table: cumulative probabilities and the matching t values.
  const std::vector<double>& cdf_knots() const noexcept { return cdf_; }
  std::vector<double> t_knots() const;

  // Inverse CDF; u in (0,1).
  double quantile(double u) const noexcept;
  // dQ/dP0 at t.
  double density(double t) const;
  // log dP0/dQ at t: log phi - lambda Y(t).
  double log_weight(double t) const;

  double draw(Stream& stream) const noexcept { return quantile(stream.uniform()); }

 private:
  friend ExponentialTilt build_tilt(const AlternativeModel&,
                                    const NormalizingConstants&, double,
                                    std::size_t, const QuadratureSpec&);
  ExponentialTilt(AlternativeModel model, NormalizingConstants c)
      : model_(std::move(model)), constants_(c) {}

  double lambda_ = 0.0;
  AlternativeModel model_;
  NormalizingConstants constants_;
  double phi_ = 1.0;
  double log_phi_ = 0.0;
  double beta_ = 1.0;
  std::size_t cells_ = 0;
  std::vector<double> cdf_;      // size cells+1, cdf_[0] = 0, back() = 1
  std::vector<double> s_;        // knot positions in s
  std::vector<double> slope_l_;  // ds/du at the left end of each cell
  std::vector<double> slope_r_;  // ds/du at the right end of each cell
  std::vector<std::uint32_t> guide_;
};

ExponentialTilt build_tilt(const AlternativeModel& model,
                           const NormalizingConstants& c, double lambda,
                           std::size_t grid_size = 4096,
                           const QuadratureSpec& spec = {});

std::vector<double> sample_tilt(const ExponentialTilt& tilt, Stream& stream,
                                std::size_t count);

/// Piecewise-constant law on (0,1) with density
///   g = 1 + c on (theta, 2 theta), 1 - w on (1 - w, 1), 1 elsewhere,
/// c = x^((r+q)/q) / theta, w = x^((r+q)/(2q)), so theta c = w^2 and the
/// total mass is one. kappa = (sqrt(1-2r)/2) x (x / theta^q)^(r/q) is the
/// asymptotic lower bound on E[Y] under this law.
struct CounterexampleTilt {
  double r = 0.0;
  double q = 0.0;
  double theta = 0.0;
  double x = 0.0;
  double c = 0.0;
  double w = 0.0;
  double kappa = 0.0;

  double density(double t) const noexcept;
  double log_density(double t) const noexcept;
  double quantile(double u) const noexcept;
  double draw(Stream& stream) const noexcept { return quantile(stream.uniform()); }
  // Mass of the bump (theta, 2 theta).
  double bump_mass() const noexcept { return theta * (1.0 + c); }
};

CounterexampleTilt make_counterexample(double r, double q, double theta,
                                       double x);

/// Exact D(Gamma || uniform) = theta(1+c)log(1+c) + w(1-w)log(1-w).
double counterexample_kl(const CounterexampleTilt& ct);
/// The leading-order form theta c log c, for ratio diagnostics.
double counterexample_kl_asymptotic(const CounterexampleTilt& ct);

std::vector<double> sample_counterexample(const CounterexampleTilt& ct,
                                          Stream& stream, std::size_t count);

/// Moments of Y under the counterexample law, by quadrature on the two
/// modified pieces.
struct CounterexampleMoments {
  double mean = 0.0;
  double second_moment = 0.0;
  double variance = 0.0;
  double kappa_margin = 0.0;  // mean - kappa
};

CounterexampleMoments counterexample_moments(const CounterexampleTilt& ct,
                                             const AlternativeModel& model,
                                             const NormalizingConstants& c,
                                             const QuadratureSpec& spec = {});

/// Throws ParameterError unless ct was built for this a_r model.
void require_consistent(const CounterexampleTilt& ct,
                        const AlternativeModel& model);

}  // namespace npmd

#endif  // NPMD_TILTING_HPP
