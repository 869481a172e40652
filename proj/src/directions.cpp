#include "npmd/directions.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "npmd/errors.hpp"
#include "npmd/quadrature.hpp"

namespace npmd {

Direction::Direction(std::string name, Fn fn, std::optional<double> bound,
                     double integrability_sup,
                     std::optional<Singularity> singularity,
                     double essential_min, std::vector<double> breakpoints)
    : name_(std::move(name)),
      fn_(std::move(fn)),
      bound_(bound),
      integrability_sup_(integrability_sup),
      singularity_(singularity),
      essential_min_(essential_min),
      breakpoints_(std::move(breakpoints)) {}

double eval_direction(const Direction& dir, double t) {
  if (!(t > 0.0 && t < 1.0)) {
    std::ostringstream os;
    os << "direction " << dir.name() << " evaluated at t=" << t
       << " outside (0,1)";
    throw DomainError(os.str());
  }
  return dir(t);
}

namespace {

std::string format_param(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

Direction make_ar(double r) {
  if (!(r > 0.0 && r < 0.5)) {
    throw ParameterError("a_r requires 0 < r < 1/2, got r=" + format_param(r));
  }
  const double scale = std::sqrt(1.0 - 2.0 * r) / r;
  const double lead = 1.0 - r;
  auto fn = [scale, lead, r](double t) {
    return scale * (lead * std::pow(t, -r) - 1.0);
  };
  // a_r is decreasing, so its essential infimum is the limit at t = 1.
  return Direction("ar:" + format_param(r), std::move(fn), std::nullopt,
                   1.0 / r, Singularity{0.0, r}, -std::sqrt(1.0 - 2.0 * r));
}

Direction make_step() {
  auto fn = [](double t) { return t < 0.5 ? 1.0 : -1.0; };
  return Direction("step", std::move(fn), 1.0,
                   std::numeric_limits<double>::infinity(), std::nullopt, -1.0,
                   {0.5});
}

Direction make_cosine() {
  auto fn = [](double t) {
    return std::numbers::sqrt2 * std::cos(2.0 * std::numbers::pi * t);
  };
  return Direction("cosine", std::move(fn), std::numbers::sqrt2,
                   std::numeric_limits<double>::infinity(), std::nullopt,
                   -std::numbers::sqrt2);
}

Direction parse_direction(std::string_view spec) {
  if (spec == "step") return make_step();
  if (spec == "cosine") return make_cosine();
  if (spec.starts_with("ar:")) {
    const std::string_view num = spec.substr(3);
    double r = 0.0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), r);
    if (ec != std::errc() || ptr != num.data() + num.size()) {
      throw ParameterError("malformed a_r parameter in direction spec '" +
                           std::string(spec) + "'");
    }
    return make_ar(r);
  }
  throw ParameterError("unknown direction spec '" + std::string(spec) +
                       "' (expected ar:<r>, step or cosine)");
}

AlternativeModel validate_model(const Direction& dir, double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw ParameterError("theta must be positive and finite, got " +
                         format_param(theta));
  }
  const double margin = 1.0 + theta * dir.essential_min();
  if (!(margin > 0.0)) {
    throw ValidityError("density 1 + theta*a is not positive for " +
                            dir.name() + " with theta=" + format_param(theta) +
                            " (min density " + format_param(margin) + ")",
                        margin);
  }
  return AlternativeModel{dir, theta};
}

NormalizationReport verify_normalization(const Direction& dir, double tol) {
  if (!(tol > 0.0)) throw ParameterError("tolerance must be positive");
  QuadratureSpec spec;
  spec.abs_tol = std::min(spec.abs_tol, tol * 1e-2);

  std::optional<Singularity> sing1 = dir.singularity();
  std::optional<Singularity> sing2 = dir.singularity();
  if (sing2) sing2->exponent *= 2.0;

  const auto first = integrate_unit([&dir](double t) { return dir(t); }, spec,
                                    sing1, dir.breakpoints());
  const auto second = integrate_unit(
      [&dir](double t) {
        const double a = dir(t);
        return a * a;
      },
      spec, sing2, dir.breakpoints());

  NormalizationReport rep;
  rep.mean = first.value;
  rep.mean_err = first.err_est;
  rep.second_moment = second.value;
  rep.second_moment_err = second.err_est;
  rep.tol = tol;
  rep.mean_ok = std::fabs(first.value) <= tol;
  rep.norm_ok = std::fabs(second.value - 1.0) <= tol;
  return rep;
}

}  // namespace npmd
