#include "npmd/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "npmd/errors.hpp"
#include "npmd/numeric.hpp"

namespace npmd {

void QuadratureSpec::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw ParameterError("quadrature tolerances must be positive");
  }
  if (max_subdivisions < 1) {
    throw ParameterError("max_subdivisions must be at least 1");
  }
}

namespace {

// Kronrod 15-point abscissae and weights with the embedded 7-point Gauss rule
// (QUADPACK qk15 tables).
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double err;
};

Segment gk15(const Integrand& f, double a, double b) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double uflow = std::numeric_limits<double>::min();
  const double centr = 0.5 * (a + b);
  const double hlgth = 0.5 * (b - a);
  const double dhlgth = std::fabs(hlgth);

  std::array<double, 7> fv1{};
  std::array<double, 7> fv2{};
  const double fc = f(centr);
  double resg = fc * kWg[3];
  double resk = fc * kWgk[7];
  double resabs = std::fabs(resk);
  for (int j = 0; j < 3; ++j) {
    const int jtw = 2 * j + 1;
    const double absc = hlgth * kXgk[jtw];
    const double f1 = f(centr - absc);
    const double f2 = f(centr + absc);
    fv1[jtw] = f1;
    fv2[jtw] = f2;
    resg += kWg[j] * (f1 + f2);
    resk += kWgk[jtw] * (f1 + f2);
    resabs += kWgk[jtw] * (std::fabs(f1) + std::fabs(f2));
  }
  for (int j = 0; j < 4; ++j) {
    const int jtwm1 = 2 * j;
    const double absc = hlgth * kXgk[jtwm1];
    const double f1 = f(centr - absc);
    const double f2 = f(centr + absc);
    fv1[jtwm1] = f1;
    fv2[jtwm1] = f2;
    resk += kWgk[jtwm1] * (f1 + f2);
    resabs += kWgk[jtwm1] * (std::fabs(f1) + std::fabs(f2));
  }
  const double reskh = resk * 0.5;
  double resasc = kWgk[7] * std::fabs(fc - reskh);
  for (int j = 0; j < 7; ++j) {
    resasc += kWgk[j] * (std::fabs(fv1[j] - reskh) + std::fabs(fv2[j] - reskh));
  }
  const double result = resk * hlgth;
  resabs *= dhlgth;
  resasc *= dhlgth;
  double abserr = std::fabs((resk - resg) * hlgth);
  if (resasc != 0.0 && abserr != 0.0) {
    abserr = resasc * std::min(1.0, std::pow(200.0 * abserr / resasc, 1.5));
  }
  if (resabs > uflow / (50.0 * eps)) {
    abserr = std::max(eps * 50.0 * resabs, abserr);
  }
  if (!std::isfinite(result) || !std::isfinite(abserr)) {
    std::ostringstream os;
    os << "integrand is not finite on [" << a << ", " << b << "]";
    throw NumericError(os.str(), result, abserr);
  }
  return {a, b, result, abserr};
}

bool err_less(const Segment& x, const Segment& y) { return x.err < y.err; }

}  // namespace

QuadratureResult integrate(const Integrand& f, double a, double b,
                           const QuadratureSpec& spec,
                           std::span<const double> breakpoints) {
  spec.validate();
  if (!(a < b)) {
    if (a == b) return {};
    throw ParameterError("integrate requires a <= b");
  }

  std::vector<double> cuts;
  cuts.push_back(a);
  for (double p : breakpoints) {
    if (p > a && p < b) cuts.push_back(p);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<Segment> heap;
  heap.reserve(static_cast<std::size_t>(spec.max_subdivisions) + cuts.size());
  std::vector<Segment> frozen;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    heap.push_back(gk15(f, cuts[i], cuts[i + 1]));
  }
  std::make_heap(heap.begin(), heap.end(), err_less);

  auto totals = [&]() {
    numeric::KahanSum v;
    numeric::KahanSum e;
    for (const auto& s : heap) {
      v.add(s.value);
      e.add(s.err);
    }
    for (const auto& s : frozen) {
      v.add(s.value);
      e.add(s.err);
    }
    return std::pair{v.value(), e.value()};
  };

  int subdivisions = static_cast<int>(heap.size());
  while (true) {
    const auto [value, err] = totals();
    const double tol = std::max(spec.abs_tol, spec.rel_tol * std::fabs(value));
    if (err <= tol || heap.empty()) {
      return {value, err, subdivisions};
    }
    if (subdivisions >= spec.max_subdivisions) {
      std::ostringstream os;
      os << "quadrature did not converge within " << spec.max_subdivisions
         << " subdivisions (error estimate " << err << ", tolerance " << tol
         << ")";
      throw NumericError(os.str(), value, err);
    }
    std::pop_heap(heap.begin(), heap.end(), err_less);
    const Segment worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval at machine resolution; its error cannot shrink further.
      frozen.push_back(worst);
      continue;
    }
    heap.push_back(gk15(f, worst.a, mid));
    std::push_heap(heap.begin(), heap.end(), err_less);
    heap.push_back(gk15(f, mid, worst.b));
    std::push_heap(heap.begin(), heap.end(), err_less);
    ++subdivisions;
  }
}

QuadratureResult integrate_unit(const Integrand& f, const QuadratureSpec& spec,
                                std::optional<Singularity> singularity,
                                std::span<const double> breakpoints) {
  if (!singularity || !spec.endpoint_substitution ||
      !(singularity->exponent > 0.0)) {
    return integrate(f, 0.0, 1.0, spec, breakpoints);
  }
  const double rho = singularity->exponent;
  if (!(rho < 1.0)) {
    throw DomainError("singularity exponent must be below 1 for an integrable "
                      "integrand");
  }
  const double beta = 1.0 / (1.0 - rho);
  const bool at_zero = singularity->location < 0.5;

  // t = u^beta (or 1 - u^beta), dt = beta u^(beta-1) du.
  auto g = [&f, beta, at_zero](double u) {
    const double ub = std::pow(u, beta);
    const double t = at_zero ? ub : 1.0 - ub;
    if (!(t > 0.0 && t < 1.0)) return 0.0;
    return f(t) * beta * std::pow(u, beta - 1.0);
  };

  std::vector<double> mapped;
  mapped.reserve(breakpoints.size());
  for (double p : breakpoints) {
    const double base = at_zero ? p : 1.0 - p;
    if (base > 0.0 && base < 1.0) mapped.push_back(std::pow(base, 1.0 / beta));
  }
  return integrate(g, 0.0, 1.0, spec, mapped);
}

double log_likelihood_ratio(const AlternativeModel& model, double t) {
  return std::log1p(model.theta * model.direction(t));
}

double standardized_llr(const AlternativeModel& model,
                        const NormalizingConstants& c, double t) {
  return (std::log1p(model.theta * model.direction(t)) - c.e0n) / c.sigma0n;
}

namespace {

std::optional<Singularity> scaled_singularity(const Direction& dir,
                                              double factor) {
  if (!dir.singularity()) return std::nullopt;
  Singularity s = *dir.singularity();
  s.exponent *= factor;
  if (!(s.exponent > 0.0)) return std::nullopt;
  return s;
}

}  // namespace

NormalizingConstants compute_constants(const AlternativeModel& model,
                                       const QuadratureSpec& spec) {
  const Direction& dir = model.direction;
  const double theta = model.theta;
  const auto sing = scaled_singularity(dir, 2.0);

  // log(1+y) = y - y^2 h(y) / 2 and int a = 0 give
  //   e0n = -theta^2/2 * int a^2 h(theta a),
  //   int log^2(1+theta a) = theta^2 int a^2 (1 - theta a h(theta a)/2)^2,
  // which keep full relative precision as theta -> 0.
  const auto mu = integrate_unit(
      [&dir, theta](double t) {
        const double a = dir(t);
        return a * a * numeric::h_unchecked(theta * a);
      },
      spec, sing, dir.breakpoints());
  const auto s2 = integrate_unit(
      [&dir, theta](double t) {
        const double a = dir(t);
        const double y = theta * a;
        const double ratio = 1.0 - 0.5 * y * numeric::h_unchecked(y);
        return a * a * ratio * ratio;
      },
      spec, sing, dir.breakpoints());

  NormalizingConstants c;
  c.e0n = -0.5 * theta * theta * mu.value;
  const double var_over_theta2 =
      s2.value - 0.25 * theta * theta * mu.value * mu.value;
  if (!(var_over_theta2 > 0.0)) {
    throw NumericError("nonpositive variance of the log-likelihood ratio",
                       var_over_theta2, s2.err_est);
  }
  c.sigma0n = theta * std::sqrt(var_over_theta2);
  c.e0n_ratio = mu.value;
  c.sigma_ratio = std::sqrt(var_over_theta2);
  return c;
}

double mgf_domain_sup(const AlternativeModel& model,
                      const NormalizingConstants& c) {
  const double q = model.direction.integrability_sup();
  if (std::isinf(q)) return numeric::kInf;
  return q * c.sigma0n;
}

namespace {

bool inside_domain(const AlternativeModel& model, const NormalizingConstants& c,
                   double lambda) {
  const double q = model.direction.integrability_sup();
  return std::isinf(q) || lambda / c.sigma0n < q;
}

// Tilted moments in a form that stays accurate both for lambda -> 0 and for
// large lambda on bounded directions.
struct TiltMoments {
  double log_phi;
  double mean;
  double variance;
};

TiltMoments tilt_moments(const AlternativeModel& model,
                         const NormalizingConstants& c, double lambda,
                         const QuadratureSpec& spec) {
  const Direction& dir = model.direction;
  const auto sing = scaled_singularity(dir, lambda / c.sigma0n);
  const auto y_of = [&model, &c](double t) {
    return standardized_llr(model, c, t);
  };

  double y_sup = numeric::kInf;
  if (dir.bound()) {
    y_sup = (std::log1p(model.theta * *dir.bound()) - c.e0n) / c.sigma0n;
  }
  const double shift = lambda * y_sup;

  if (!dir.bounded() || shift < 30.0) {
    // E Y = 0 exactly, so subtract the linear term analytically.
    const auto phi_m1 = integrate_unit(
        [&](double t) { return numeric::expm1_minus_x(lambda * y_of(t)); },
        spec, sing, dir.breakpoints());
    const auto d1 = integrate_unit(
        [&](double t) {
          const double y = y_of(t);
          return y * std::expm1(lambda * y);
        },
        spec, sing, dir.breakpoints());
    const auto d2 = integrate_unit(
        [&](double t) {
          const double y = y_of(t);
          return y * y * std::exp(lambda * y);
        },
        spec, sing, dir.breakpoints());
    const double phi = 1.0 + phi_m1.value;
    const double m = d1.value / phi;
    return {std::log1p(phi_m1.value), m, d2.value / phi - m * m};
  }

  const auto i0 = integrate_unit(
      [&](double t) { return std::exp(lambda * y_of(t) - shift); }, spec,
      std::nullopt, dir.breakpoints());
  const auto i1 = integrate_unit(
      [&](double t) {
        const double y = y_of(t);
        return y * std::exp(lambda * y - shift);
      },
      spec, std::nullopt, dir.breakpoints());
  const auto i2 = integrate_unit(
      [&](double t) {
        const double y = y_of(t);
        return y * y * std::exp(lambda * y - shift);
      },
      spec, std::nullopt, dir.breakpoints());
  const double m = i1.value / i0.value;
  return {shift + std::log(i0.value), m, i2.value / i0.value - m * m};
}

void require_inside(const AlternativeModel& model,
                    const NormalizingConstants& c, double lambda) {
  if (!std::isfinite(lambda) || !inside_domain(model, c, lambda)) {
    std::ostringstream os;
    os << "lambda=" << lambda << " is outside the mgf domain (lambda/sigma0n "
       << "must be below " << model.direction.integrability_sup() << ")";
    throw DomainError(os.str());
  }
}

}  // namespace

double log_mgf(const AlternativeModel& model, const NormalizingConstants& c,
               double lambda, const QuadratureSpec& spec) {
  if (lambda == 0.0) return 0.0;
  if (!inside_domain(model, c, lambda)) return numeric::kInf;
  const Direction& dir = model.direction;
  double y_sup = numeric::kInf;
  if (dir.bound()) {
    y_sup = (std::log1p(model.theta * *dir.bound()) - c.e0n) / c.sigma0n;
  }
  if (dir.bounded() && lambda * y_sup >= 30.0) {
    return tilt_moments(model, c, lambda, spec).log_phi;
  }
  const auto phi_m1 = integrate_unit(
      [&](double t) {
        return numeric::expm1_minus_x(lambda * standardized_llr(model, c, t));
      },
      spec, scaled_singularity(dir, lambda / c.sigma0n), dir.breakpoints());
  return std::log1p(phi_m1.value);
}

double mgf(const AlternativeModel& model, const NormalizingConstants& c,
           double lambda, const QuadratureSpec& spec) {
  return std::exp(log_mgf(model, c, lambda, spec));
}

MgfDerivatives mgf_derivatives(const AlternativeModel& model,
                               const NormalizingConstants& c, double lambda,
                               const QuadratureSpec& spec) {
  require_inside(model, c, lambda);
  const TiltMoments tm = tilt_moments(model, c, lambda, spec);
  MgfDerivatives d;
  d.log_phi = tm.log_phi;
  d.phi = std::exp(tm.log_phi);
  d.dphi = tm.mean * d.phi;
  d.d2phi = (tm.variance + tm.mean * tm.mean) * d.phi;
  return d;
}

double tilted_mean(const AlternativeModel& model, const NormalizingConstants& c,
                   double lambda, const QuadratureSpec& spec) {
  require_inside(model, c, lambda);
  return tilt_moments(model, c, lambda, spec).mean;
}

double tilted_variance(const AlternativeModel& model,
                       const NormalizingConstants& c, double lambda,
                       const QuadratureSpec& spec) {
  require_inside(model, c, lambda);
  return tilt_moments(model, c, lambda, spec).variance;
}

double kl_exponential_tilt(const AlternativeModel& model,
                           const NormalizingConstants& c, double lambda,
                           const QuadratureSpec& spec) {
  require_inside(model, c, lambda);
  if (lambda == 0.0) return 0.0;
  const TiltMoments tm = tilt_moments(model, c, lambda, spec);
  return lambda * tm.mean - tm.log_phi;
}

}  // namespace npmd
