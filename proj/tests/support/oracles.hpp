// Independent reference values for the tests. Nothing here calls into the
// library; the integrals go through Boost's tanh-sinh rule, which copes with
// integrable endpoint singularities on its own.
#ifndef NPMD_TESTS_ORACLES_HPP
#define NPMD_TESTS_ORACLES_HPP

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

inline double ar(double r, double t) {
  return std::sqrt(1.0 - 2.0 * r) / r * ((1.0 - r) * std::pow(t, -r) - 1.0);
}
inline double step(double t) { return t < 0.5 ? 1.0 : -1.0; }
inline double cosine(double t) {
  return std::numbers::sqrt2 * std::cos(2.0 * std::numbers::pi * t);
}

inline double integrate01(const std::function<double(double)>& f) {
  static boost::math::quadrature::tanh_sinh<double> rule(15);
  return rule.integrate(f, 0.0, 1.0, 1e-13);
}

// Splits at 1/2 so the step discontinuity sits on a panel edge.
inline double integrate01_split(const std::function<double(double)>& f) {
  static boost::math::quadrature::tanh_sinh<double> rule(15);
  return rule.integrate(f, 0.0, 0.5, 1e-13) + rule.integrate(f, 0.5, 1.0, 1e-13);
}

struct Constants {
  double e0n;
  double sigma0n;
};

// Plain-definition mean and sd of log(1 + theta a(U)); fine for theta >= 0.01.
inline Constants constants(const std::function<double(double)>& a, double theta) {
  const auto l = [&](double t) { return std::log1p(theta * a(t)); };
  const double e = integrate01_split(l);
  const double v = integrate01_split([&](double t) {
    const double d = l(t) - e;
    return d * d;
  });
  return {e, std::sqrt(v)};
}

// Step direction: log(1 +- theta) with equal mass.
inline Constants step_constants(double theta) {
  return {0.5 * std::log1p(-theta * theta), std::atanh(theta)};
}

// int_0^1 log(1 + b cos 2 pi t) dt
inline double cosine_log_mean(double theta) {
  const double b = theta * std::numbers::sqrt2;
  return std::log((1.0 + std::sqrt(1.0 - b * b)) / 2.0);
}

inline double log_binom_pmf(std::int64_t n, std::int64_t k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
         static_cast<double>(n) * std::log(2.0);
}

// P(Bin(n, 1/2) >= k) by log-space summation.
inline double binomial_upper_tail(std::int64_t n, std::int64_t k) {
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  const double top = log_binom_pmf(n, k);
  double s = 0.0;
  for (std::int64_t j = k; j <= n; ++j) {
    const double term = std::exp(log_binom_pmf(n, j) - top);
    s += term;
    if (term < 1e-18 * s) break;
  }
  return std::exp(top + std::log(s));
}

// P(step V_n >= sqrt(n) x): #heads h with 2h - n >= n x.
inline double step_tail(std::int64_t n, double x) {
  const double need = 0.5 * static_cast<double>(n) * (1.0 + x);
  return binomial_upper_tail(n, static_cast<std::int64_t>(std::ceil(need - 1e-9)));
}

inline double h(double y) {
  const long double v = y;
  return static_cast<double>(2.0L * (v - std::log1p(v)) / (v * v));
}

// Exact KL of the piecewise-constant counterexample law, straight from the
// densities (no cancellation handling; fine away from c, w -> 0).
inline double counterexample_kl(double r, double q, double theta, double x) {
  const double e = (r + q) / q;
  const double c = std::pow(x, e) / theta;
  const double w = std::pow(x, e / 2.0);
  return theta * (1.0 + c) * std::log(1.0 + c) + w * (1.0 - w) * std::log(1.0 - w);
}

struct Atom {
  double value;
  double prob;
};

// Brute-force P(mean >= x) over all atoms^n sequences.
inline double enumerate_tail(const std::vector<Atom>& atoms, int n, double x) {
  const std::size_t k = atoms.size();
  std::vector<std::size_t> idx(n, 0);
  double total = 0.0;
  while (true) {
    double s = 0.0;
    double p = 1.0;
    for (int i = 0; i < n; ++i) {
      s += atoms[idx[i]].value;
      p *= atoms[idx[i]].prob;
    }
    if (s >= n * x - 1e-9 * std::max(1.0, std::fabs(n * x))) total += p;
    int i = 0;
    while (i < n && ++idx[i] == k) idx[i++] = 0;
    if (i == n) break;
  }
  return total;
}

}  // namespace oracle

#endif  // NPMD_TESTS_ORACLES_HPP
