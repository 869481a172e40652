#include "npmd/tilting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "npmd/errors.hpp"
#include "npmd/numeric.hpp"

namespace npmd {

namespace {

double y_supremum(const AlternativeModel& model, const NormalizingConstants& c) {
  const auto& b = model.direction.bound();
  if (!b) return numeric::kInf;
  return (std::log1p(model.theta * *b) - c.e0n) / c.sigma0n;
}

}  // namespace

double solve_tilt(const AlternativeModel& model, const NormalizingConstants& c,
                  double target_mean, double tol, const QuadratureSpec& spec) {
  if (!(target_mean >= 0.0) || !std::isfinite(target_mean)) {
    throw ParameterError("tilt target must be a finite nonnegative mean");
  }
  if (!(tol > 0.0)) throw ParameterError("tilt tolerance must be positive");
  if (target_mean == 0.0) return 0.0;

  const double y_sup = y_supremum(model, c);
  if (target_mean >= y_sup) {
    std::ostringstream os;
    os << "tilt target " << target_mean << " is not below ess sup Y = " << y_sup;
    throw RangeError(os.str(), y_sup);
  }
  // Keep clear of the mgf boundary (unbounded a) or of exp overflow (bounded a).
  const double cap = model.direction.bounded()
                         ? 700.0 / y_sup
                         : mgf_domain_sup(model, c) * (1.0 - 1e-3);
  const auto m = [&](double lambda) {
    return tilted_mean(model, c, lambda, spec);
  };

  double lo = 0.0;
  double f_lo = -target_mean;
  double hi = std::min(5.0 / 6.0 * c.sigma0n, cap);
  double f_hi = m(hi) - target_mean;
  while (f_hi < 0.0) {
    if (hi >= cap) {
      std::ostringstream os;
      os << "tilt target " << target_mean
         << " unreachable inside the mgf domain; sup m reached "
         << f_hi + target_mean;
      throw RangeError(os.str(), f_hi + target_mean);
    }
    lo = hi;
    f_lo = f_hi;
    hi = std::min(2.0 * hi, cap);
    f_hi = m(hi) - target_mean;
  }
  if (std::fabs(f_hi) <= tol) return hi;

  // Illinois-modified regula falsi; m is increasing on the bracket.
  int side = 0;
  for (int iter = 0; iter < 200; ++iter) {
    double mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    const double f_mid = m(mid) - target_mean;
    if (std::fabs(f_mid) <= tol || hi - lo <= 4e-16 * hi) return mid;
    if (f_mid < 0.0) {
      lo = mid;
      f_lo = f_mid;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = mid;
      f_hi = f_mid;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
  }
  return 0.5 * (lo + hi);
}

TiltBracketDiagnostic check_tilt_bracket(double lambda, double x,
                                         double epsilon, double sigma0n) {
  TiltBracketDiagnostic d;
  d.lambda = lambda;
  d.x = x;
  d.epsilon = epsilon;
  d.upper = x * (1.0 + epsilon) * (1.0 + epsilon / 8.0) / (1.0 - epsilon / 4.0);
  d.above_x = x <= lambda;
  d.below_upper = lambda <= d.upper;
  d.below_two_eps = lambda <= (1.0 + 2.0 * epsilon) * x;
  d.below_five_sixths_sigma = lambda < 5.0 * sigma0n / 6.0;
  return d;
}

std::vector<double> ExponentialTilt::t_knots() const {
  std::vector<double> t(s_.size());
  std::transform(s_.begin(), s_.end(), t.begin(),
                 [this](double s) { return beta_ == 1.0 ? s : std::pow(s, beta_); });
  return t;
}

double ExponentialTilt::quantile(double u) const noexcept {
  const std::size_t g = guide_.size();
  std::size_t j = static_cast<std::size_t>(u * static_cast<double>(g));
  if (j >= g) j = g - 1;
  std::size_t k = guide_[j];
  while (k + 1 < cells_ && cdf_[k + 1] <= u) ++k;

  const double h = cdf_[k + 1] - cdf_[k];
  double s = s_[k];
  if (h > 0.0) {
    double tau = (u - cdf_[k]) / h;
    tau = std::clamp(tau, 0.0, 1.0);
    const double tau2 = tau * tau;
    const double tau3 = tau2 * tau;
    s = (2.0 * tau3 - 3.0 * tau2 + 1.0) * s_[k] +
        (tau3 - 2.0 * tau2 + tau) * h * slope_l_[k] +
        (-2.0 * tau3 + 3.0 * tau2) * s_[k + 1] +
        (tau3 - tau2) * h * slope_r_[k];
    s = std::clamp(s, s_[k], s_[k + 1]);
  }
  double t = beta_ == 1.0 ? s : std::pow(s, beta_);
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - 0x1.0p-53;
  return std::clamp(t, lo, hi);
}

double ExponentialTilt::density(double t) const {
  return std::exp(lambda_ * standardized_llr(model_, constants_, t) - log_phi_);
}

double ExponentialTilt::log_weight(double t) const {
  return log_phi_ - lambda_ * standardized_llr(model_, constants_, t);
}

ExponentialTilt build_tilt(const AlternativeModel& model,
                           const NormalizingConstants& c, double lambda,
                           std::size_t grid_size, const QuadratureSpec& spec) {
  if (grid_size < 2) throw ParameterError("tilt grid needs at least 2 cells");
  if (!std::isfinite(lambda)) throw DomainError("tilt lambda must be finite");
  const double log_phi = log_mgf(model, c, lambda, spec);
  if (!std::isfinite(log_phi)) {
    std::ostringstream os;
    os << "lambda=" << lambda << " is outside the mgf domain of "
       << model.direction.name();
    throw DomainError(os.str());
  }

  ExponentialTilt tilt(model, c);
  tilt.lambda_ = lambda;
  tilt.log_phi_ = log_phi;
  tilt.phi_ = std::exp(log_phi);

  const Direction& dir = model.direction;
  double rho = 0.0;
  if (dir.singularity() && dir.singularity()->location < 0.5 && lambda > 0.0) {
    rho = dir.singularity()->exponent * lambda / c.sigma0n;
  }
  const double beta = 1.0 / (1.0 - rho);
  tilt.beta_ = beta;

  // Knots uniform in s, plus the images of the direction's jump points.
  std::vector<double> knots(grid_size + 1);
  for (std::size_t k = 0; k <= grid_size; ++k) {
    knots[k] = static_cast<double>(k) / static_cast<double>(grid_size);
  }
  std::vector<double> jumps;
  for (double b : dir.breakpoints()) {
    jumps.push_back(beta == 1.0 ? b : std::pow(b, 1.0 / beta));
  }
  knots.insert(knots.end(), jumps.begin(), jumps.end());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  const std::size_t cells = knots.size() - 1;

  const auto dens = [&](double s) {
    const double t = beta == 1.0 ? s : std::pow(s, beta);
    if (!(t > 0.0 && t < 1.0)) return 0.0;
    const double jac = beta == 1.0 ? 1.0 : beta * std::pow(s, beta - 1.0);
    return std::exp(lambda * standardized_llr(model, c, t) - log_phi) * jac;
  };
  QuadratureSpec cell_spec = spec;
  cell_spec.abs_tol = std::min(spec.abs_tol, 1e-15);

  std::vector<double> cdf(cells + 1, 0.0);
  numeric::KahanSum acc;
  for (std::size_t k = 0; k < cells; ++k) {
    acc.add(integrate(dens, knots[k], knots[k + 1], cell_spec).value);
    cdf[k + 1] = acc.value();
  }
  const double total = cdf.back();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("tilted density has no finite positive mass", total, 0.0);
  }
  for (auto& v : cdf) v /= total;
  cdf.back() = 1.0;

  // Secant slopes ds/du per cell.
  std::vector<double> delta(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    const double h = cdf[k + 1] - cdf[k];
    delta[k] = h > 0.0 ? (knots[k + 1] - knots[k]) / h : numeric::kInf;
  }
  std::vector<double> slope_l(delta);
  std::vector<double> slope_r(delta);
  for (std::size_t k = 1; k < cells; ++k) {
    const bool is_jump =
        std::find(jumps.begin(), jumps.end(), knots[k]) != jumps.end();
    if (is_jump) continue;
    const double h0 = cdf[k] - cdf[k - 1];
    const double h1 = cdf[k + 1] - cdf[k];
    const double w1 = 2.0 * h1 + h0;
    const double w2 = h1 + 2.0 * h0;
    const double denom = w1 / delta[k - 1] + w2 / delta[k];
    const double d = denom > 0.0 ? (w1 + w2) / denom : 0.0;
    slope_r[k - 1] = d;
    slope_l[k] = d;
  }

  // guide[j] = first cell whose upper cdf exceeds j / cells.
  std::vector<std::uint32_t> guide(cells);
  std::size_t k = 0;
  for (std::size_t j = 0; j < cells; ++j) {
    const double level = static_cast<double>(j) / static_cast<double>(cells);
    while (k + 1 < cells && cdf[k + 1] <= level) ++k;
    guide[j] = static_cast<std::uint32_t>(k);
  }

  tilt.cells_ = cells;
  tilt.cdf_ = std::move(cdf);
  tilt.s_ = std::move(knots);
  tilt.slope_l_ = std::move(slope_l);
  tilt.slope_r_ = std::move(slope_r);
  tilt.guide_ = std::move(guide);
  return tilt;
}

std::vector<double> sample_tilt(const ExponentialTilt& tilt, Stream& stream,
                                std::size_t count) {
  if (count < 1) throw ParameterError("sample count must be at least 1");
  std::vector<double> out(count);
  for (auto& t : out) t = tilt.draw(stream);
  return out;
}

double CounterexampleTilt::density(double t) const noexcept {
  if (t > theta && t < 2.0 * theta) return 1.0 + c;
  if (t > 1.0 - w) return 1.0 - w;
  return 1.0;
}

double CounterexampleTilt::log_density(double t) const noexcept {
  if (t > theta && t < 2.0 * theta) return std::log1p(c);
  if (t > 1.0 - w) return std::log1p(-w);
  return 0.0;
}

double CounterexampleTilt::quantile(double u) const noexcept {
  const double f1 = theta;
  const double f2 = f1 + theta * (1.0 + c);
  const double f3 = f2 + (1.0 - w - 2.0 * theta);
  double t;
  if (u < f1) {
    t = u;
  } else if (u < f2) {
    t = theta + (u - f1) / (1.0 + c);
  } else if (u < f3 || w == 0.0) {
    t = 2.0 * theta + (u - f2);
  } else {
    t = 1.0 - w + (u - f3) / (1.0 - w);
  }
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - 0x1.0p-53;
  return std::clamp(t, lo, hi);
}

CounterexampleTilt make_counterexample(double r, double q, double theta,
                                       double x) {
  if (!(q > 0.0 && q < r && r < 0.5)) {
    throw ParameterError("counterexample requires 0 < q < r < 1/2");
  }
  if (!(theta > 0.0) || !(x >= 0.0) || !std::isfinite(x)) {
    throw ParameterError("counterexample requires theta > 0 and x >= 0");
  }
  CounterexampleTilt ct;
  ct.r = r;
  ct.q = q;
  ct.theta = theta;
  ct.x = x;
  const double e = (r + q) / q;
  ct.c = std::pow(x, e) / theta;
  ct.w = std::pow(x, 0.5 * e);
  ct.kappa = 0.5 * std::sqrt(1.0 - 2.0 * r) * x *
             std::pow(x / std::pow(theta, q), r / q);
  if (!(ct.w < 1.0) || !(2.0 * theta < 1.0 - ct.w)) {
    std::ostringstream os;
    os << "counterexample pieces overlap: need w < 1 and 2 theta < 1 - w, got "
       << "theta=" << theta << ", w=" << ct.w;
    throw ParameterError(os.str());
  }
  return ct;
}

namespace {

// (1+c) log(1+c) - c
double bump_term(double c) {
  if (c < 1e-3) {
    return c * c * (0.5 + c * (-1.0 / 6.0 + c * (1.0 / 12.0 - c / 20.0)));
  }
  return (1.0 + c) * std::log1p(c) - c;
}

// w (1-w) log(1-w) + w^2
double deficit_term(double w) {
  if (w < 1e-3) {
    return w * w * w * (0.5 + w * (1.0 / 6.0 + w * (1.0 / 12.0 + w / 20.0)));
  }
  return w * (1.0 - w) * std::log1p(-w) + w * w;
}

}  // namespace

double counterexample_kl(const CounterexampleTilt& ct) {
  // theta c = w^2 cancels between the two pieces.
  return ct.theta * bump_term(ct.c) + deficit_term(ct.w);
}

double counterexample_kl_asymptotic(const CounterexampleTilt& ct) {
  if (ct.c <= 0.0) return 0.0;
  return ct.theta * ct.c * std::log(ct.c);
}

std::vector<double> sample_counterexample(const CounterexampleTilt& ct,
                                          Stream& stream, std::size_t count) {
  if (count < 1) throw ParameterError("sample count must be at least 1");
  std::vector<double> out(count);
  for (auto& t : out) t = ct.draw(stream);
  return out;
}

void require_consistent(const CounterexampleTilt& ct,
                        const AlternativeModel& model) {
  const auto& sing = model.direction.singularity();
  const bool same_r = sing && std::fabs(sing->exponent - ct.r) <= 1e-12 &&
                      model.direction.name().starts_with("ar:");
  const bool same_theta =
      std::fabs(model.theta - ct.theta) <= 1e-12 * std::fabs(ct.theta);
  if (!same_r || !same_theta) {
    throw ParameterError("counterexample law was built for a different (r, "
                         "theta) than the model " + model.direction.name());
  }
}

CounterexampleMoments counterexample_moments(const CounterexampleTilt& ct,
                                             const AlternativeModel& model,
                                             const NormalizingConstants& c,
                                             const QuadratureSpec& spec) {
  require_consistent(ct, model);
  const double theta = ct.theta;
  const double w = ct.w;
  const auto y = [&](double t) { return standardized_llr(model, c, t); };

  // Integrate in scaled variables so tiny pieces keep relative accuracy.
  const auto bump1 = integrate([&](double v) { return y(theta * v); }, 1.0, 2.0, spec);
  const auto bump2 = integrate(
      [&](double v) {
        const double yy = y(theta * v);
        return yy * yy;
      },
      1.0, 2.0, spec);
  double tail1 = 0.0;
  double tail2 = 0.0;
  if (w > 0.0) {
    tail1 = integrate([&](double v) { return y(1.0 - w * v); }, 0.0, 1.0, spec).value;
    tail2 = integrate(
                [&](double v) {
                  const double yy = y(1.0 - w * v);
                  return yy * yy;
                },
                0.0, 1.0, spec)
                .value;
  }
  // int Y dt = 0 and int Y^2 dt = 1 under uniformity.
  CounterexampleMoments m;
  m.mean = ct.c * theta * bump1.value - w * w * tail1;
  m.second_moment = 1.0 + ct.c * theta * bump2.value - w * w * tail2;
  m.variance = m.second_moment - m.mean * m.mean;
  m.kappa_margin = m.mean - ct.kappa;
  return m;
}

}  // namespace npmd
