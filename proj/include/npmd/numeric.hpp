#ifndef NPMD_NUMERIC_HPP
#define NPMD_NUMERIC_HPP

#include <cmath>
#include <limits>
#include <span>

namespace npmd::numeric {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Neumaier-compensated running sum.
class KahanSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// 2 (y - log(1+y)) / y^2 for y > -1, with the removable point h(0) = 1.
// No domain check; bounds::h_function is the checked entry point.
inline double h_unchecked(double y) noexcept {
  if (std::fabs(y) < 1e-4) {
    // 2 * sum_{k>=0} (-1)^k y^k / (k + 2)
    return 1.0 - 2.0 * y / 3.0 + y * y / 2.0 - 2.0 * y * y * y / 5.0;
  }
  return 2.0 * (y - std::log1p(y)) / (y * y);
}

// e^z - 1 - z without cancellation for small |z|.
inline double expm1_minus_x(double z) noexcept {
  if (std::fabs(z) < 1e-3) {
    const double z2 = z * z;
    return z2 * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)));
  }
  return std::expm1(z) - z;
}

// log(sum exp(v)), ignoring -inf entries; returns -inf for an empty or all
// -inf input.
inline double log_sum_exp(std::span<const double> v) noexcept {
  double hi = -kInf;
  for (double x : v) hi = x > hi ? x : hi;
  if (hi == -kInf) return -kInf;
  KahanSum s;
  for (double x : v) {
    if (x != -kInf) s.add(std::exp(x - hi));
  }
  return hi + std::log(s.value());
}

// log(e^a + e^b)
inline double log_add(double a, double b) noexcept {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace npmd::numeric

#endif  // NPMD_NUMERIC_HPP
