#ifndef NPMD_QUADRATURE_HPP
#define NPMD_QUADRATURE_HPP

#include <functional>
#include <optional>
#include <span>

#include "npmd/directions.hpp"

namespace npmd {

struct QuadratureSpec {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int max_subdivisions = 2000;
  // Map u = t^(1-rho) near a declared singular endpoint before refining.
  bool endpoint_substitution = true;

  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double err_est = 0.0;
  int subdivisions = 0;
};

using Integrand = std::function<double(double)>;

/// Globally adaptive Gauss-Kronrod (7/15) integration over [a, b], split at
/// the given interior breakpoints. Throws NumericError if the tolerance
/// max(abs_tol, rel_tol |value|) is not met within max_subdivisions.
QuadratureResult integrate(const Integrand& f, double a, double b,
                           const QuadratureSpec& spec,
                           std::span<const double> breakpoints = {});

/// Integral over (0,1). When a singularity with exponent rho < 1 is given and
/// substitution is enabled, integrates in u = t^(1-rho) (or 1 - t mirrored
/// for a singularity at 1) where the integrand is bounded.
QuadratureResult integrate_unit(const Integrand& f, const QuadratureSpec& spec,
                                std::optional<Singularity> singularity = {},
                                std::span<const double> breakpoints = {});

/// Mean and standard deviation of log(1 + theta a(U)) under uniformity.
struct NormalizingConstants {
  double e0n = 0.0;
  double sigma0n = 0.0;
  // Diagnostics: e0n / (-theta^2/2) and sigma0n / theta, both -> 1 as theta -> 0.
  double e0n_ratio = 0.0;
  double sigma_ratio = 0.0;
};

NormalizingConstants compute_constants(const AlternativeModel& model,
                                       const QuadratureSpec& spec = {});

/// log(1 + theta a(t)).
double log_likelihood_ratio(const AlternativeModel& model, double t);
/// Y(t) = (log(1 + theta a(t)) - e0n) / sigma0n.
double standardized_llr(const AlternativeModel& model,
                        const NormalizingConstants& c, double t);

/// Right end of the mgf finiteness domain in lambda: integrability_sup *
/// sigma0n (+inf for bounded directions). phi(lambda) < inf iff lambda is
/// strictly below it.
double mgf_domain_sup(const AlternativeModel& model,
                      const NormalizingConstants& c);

/// phi(lambda) = E_0 exp(lambda Y), +inf outside the finiteness domain.
double mgf(const AlternativeModel& model, const NormalizingConstants& c,
           double lambda, const QuadratureSpec& spec = {});

/// log phi(lambda), accurate when phi is close to 1.
double log_mgf(const AlternativeModel& model, const NormalizingConstants& c,
               double lambda, const QuadratureSpec& spec = {});

struct MgfDerivatives {
  double phi = 1.0;
  double dphi = 0.0;
  double d2phi = 1.0;
  double log_phi = 0.0;
};

/// phi, phi', phi'' by quadrature of the moment integrands. DomainError when
/// lambda is not strictly inside the finiteness domain.
MgfDerivatives mgf_derivatives(const AlternativeModel& model,
                               const NormalizingConstants& c, double lambda,
                               const QuadratureSpec& spec = {});

/// m(lambda) = phi'/phi.
double tilted_mean(const AlternativeModel& model, const NormalizingConstants& c,
                   double lambda, const QuadratureSpec& spec = {});
/// phi''/phi - m^2.
double tilted_variance(const AlternativeModel& model,
                       const NormalizingConstants& c, double lambda,
                       const QuadratureSpec& spec = {});
/// D(Q_lambda || P) = lambda m(lambda) - log phi(lambda).
double kl_exponential_tilt(const AlternativeModel& model,
                           const NormalizingConstants& c, double lambda,
                           const QuadratureSpec& spec = {});

}  // namespace npmd

#endif  // NPMD_QUADRATURE_HPP
