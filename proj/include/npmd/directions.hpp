#ifndef NPMD_DIRECTIONS_HPP
#define NPMD_DIRECTIONS_HPP

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace npmd {

/// Power-law endpoint singularity: f(t) ~ C |t - location|^(-exponent).
struct Singularity {
  double location = 0.0;  // 0 or 1
  double exponent = 0.0;
};

/// A perturbation direction a on (0,1) with mean zero and unit L2 norm,
/// together with the analytic facts downstream code relies on (sup norm,
/// integrability exponent, singularity, essential infimum). Immutable.
class Direction {
 public:
  using Fn = std::function<double(double)>;

  Direction(std::string name, Fn fn, std::optional<double> bound,
            double integrability_sup, std::optional<Singularity> singularity,
            double essential_min, std::vector<double> breakpoints = {});

  const std::string& name() const noexcept { return name_; }
  // sup |a|, absent for unbounded directions.
  const std::optional<double>& bound() const noexcept { return bound_; }
  // sup { q : a in L_q }; +inf when bounded.
  double integrability_sup() const noexcept { return integrability_sup_; }
  const std::optional<Singularity>& singularity() const noexcept {
    return singularity_;
  }
  double essential_min() const noexcept { return essential_min_; }
  // Interior points where a jumps; quadrature splits there.
  const std::vector<double>& breakpoints() const noexcept {
    return breakpoints_;
  }
  bool bounded() const noexcept { return bound_.has_value(); }

  // Unchecked evaluation for hot loops; t must lie in (0,1).
  double operator()(double t) const { return fn_(t); }

 private:
  std::string name_;
  Fn fn_;
  std::optional<double> bound_;
  double integrability_sup_;
  std::optional<Singularity> singularity_;
  double essential_min_;
  std::vector<double> breakpoints_;
};

/// a(t) with the domain check 0 < t < 1 (DomainError otherwise).
double eval_direction(const Direction& dir, double t);

/// a_r(t) = (sqrt(1-2r)/r) ((1-r) t^(-r) - 1), 0 < r < 1/2.
Direction make_ar(double r);
/// +1 on (0, 1/2), -1 on (1/2, 1).
Direction make_step();
/// sqrt(2) cos(2 pi t).
Direction make_cosine();

/// Resolves "ar:<r>", "step" or "cosine".
Direction parse_direction(std::string_view spec);

/// Density 1 + theta * a on (0,1).
struct AlternativeModel {
  Direction direction;
  double theta = 0.0;

  double density(double t) const { return 1.0 + theta * direction(t); }
  // Essential infimum of the density.
  double min_density() const {
    return 1.0 + theta * direction.essential_min();
  }
};

AlternativeModel validate_model(const Direction& dir, double theta);

struct NormalizationReport {
  double mean = 0.0;
  double mean_err = 0.0;
  double second_moment = 0.0;
  double second_moment_err = 0.0;
  double tol = 0.0;
  bool mean_ok = false;
  bool norm_ok = false;

  bool passed() const noexcept { return mean_ok && norm_ok; }
};

/// Checks int a = 0 and int a^2 = 1 by quadrature against tol.
NormalizationReport verify_normalization(const Direction& dir, double tol);

}  // namespace npmd

#endif  // NPMD_DIRECTIONS_HPP
