#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "npmd/bounds.hpp"
#include "npmd/cli/experiment.hpp"
#include "npmd/errors.hpp"
#include "oracles.hpp"

using namespace npmd;

TEST(HFunction, Values) {
  EXPECT_DOUBLE_EQ(h_function(0.0), 1.0);
  EXPECT_NEAR(h_function(1.0), 0.6137056, 1e-7);
  EXPECT_NEAR(h_function(-0.5), 1.5451774, 1e-7);
  EXPECT_THROW(h_function(-1.0), DomainError);
  // series branch joins the closed form
  for (double y : {0.99e-4, 1.01e-4, -0.99e-4, -1.01e-4, 0.3, 5.0}) {
    EXPECT_NEAR(h_function(y), oracle::h(y), 1e-10) << y;
  }
  double prev = h_function(-0.9);
  for (double y = -0.9 + 1e-3; y < 10.0; y += 1e-3) {
    const double v = h_function(y);
    EXPECT_LT(v, prev) << y;
    prev = v;
  }
}

TEST(LogInequality, Holds) {
  for (double eps : {0.1, 0.3, 0.5}) {
    const auto rep = check_log_inequality(eps, 10000);
    EXPECT_TRUE(rep.holds()) << eps;
    EXPECT_EQ(rep.points, 10000u);
  }
  const std::vector<double> one{0.1};
  const auto r = check_log_inequality(0.1, one);
  EXPECT_NEAR(r.min_lower_slack, std::log1p(0.1) - 0.0946296, 1e-7);
  EXPECT_NEAR(r.min_upper_slack, 0.0953333 - std::log1p(0.1), 1e-7);
  const std::vector<double> zero{0.0};
  EXPECT_EQ(check_log_inequality(0.3, zero).min_lower_slack, 0.0);
  EXPECT_THROW(check_log_inequality(1.0, 10), ParameterError);
}

TEST(Classical, Bernstein) {
  EXPECT_NEAR(bernstein_bound(100, 1, 1, 30), 2.0 * std::exp(-900.0 / 220.0), 1e-15);
  EXPECT_NEAR(bernstein_bound(100, 1, 1, 30), 0.0334, 1e-4);
  EXPECT_EQ(bernstein_bound(100, 1, 1, 0), 2.0);
  // two-sided +-1 sums, n = 20
  for (int s = 2; s <= 20; s += 2) {
    const double k = (20.0 + s) / 2.0;
    const double exact = 2.0 * oracle::binomial_upper_tail(20, static_cast<std::int64_t>(k));
    EXPECT_GE(bernstein_bound(20, 1, 1, s), exact) << s;
  }
}

TEST(Classical, Cantelli) {
  EXPECT_NEAR(cantelli_bound(100, 1, 3), 100.0 / 109.0, 1e-15);
  EXPECT_NEAR(cantelli_bound(1e4, 1, 0.1 * 1e4 * 0.3), 0.1, 1e-15);
  EXPECT_EQ(cantelli_bound(100, 1, 0), 1.0);
}

TEST(Chernoff, StepFixture) {
  const auto m = validate_model(make_step(), 0.5);
  const auto c = compute_constants(m);
  const double b = chernoff_upper(m, c, 100, 0.3);
  EXPECT_NEAR(b, std::exp(100.0 * (-0.09 + std::log(std::cosh(0.3)))), 1e-12);
  EXPECT_NEAR(b, 0.01040, 1e-5);
  EXPECT_GE(b, oracle::step_tail(100, 0.3));
  EXPECT_EQ(chernoff_upper(m, c, 100, 0.0), 1.0);
  const auto ma = validate_model(make_ar(0.25), 0.1);
  const auto ca = compute_constants(ma);
  EXPECT_THROW(chernoff_upper(ma, ca, 100, 4.2 * ca.sigma0n), DomainError);
}

TEST(Discrete, Validation) {
  EXPECT_THROW(DiscreteDistribution({{1.0, 0.5}, {2.0, 0.4}}), ParameterError);
  EXPECT_THROW(DiscreteDistribution({{1.0, 0.5}, {1.0, 0.5}}), ParameterError);
  EXPECT_THROW(DiscreteDistribution({{1.0, 1.5}, {2.0, -0.5}}), ParameterError);
  const DiscreteDistribution coin({{-1.0, 0.5}, {1.0, 0.5}});
  EXPECT_NEAR(coin.tilt(std::atanh(0.2)).mean(), 0.2, 1e-15);
  const DiscreteDistribution other({{-1.0, 0.5}, {2.0, 0.5}});
  EXPECT_THROW(kl_divergence(other, coin), ParameterError);
}

TEST(Mogulskii, Fixture) {
  const DiscreteDistribution coin({{-1.0, 0.5}, {1.0, 0.5}});
  const auto r = mogulskii_lower(coin, coin.tilt(std::atanh(0.2)), 0.3, 1.8, 10);
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.p_event, 0.171875, 1e-14);
  EXPECT_NEAR(r.kl, 0.020136, 1e-6);
  EXPECT_NEAR(r.lhs, 0.3088, 1e-4);
  EXPECT_NEAR(r.rhs, 0.2689, 1e-4);
}

TEST(Mogulskii, Boundaries) {
  const DiscreteDistribution coin({{-1.0, 0.5}, {1.0, 0.5}});
  const auto same = mogulskii_lower(coin, coin, 0.3, 1.8, 10);
  EXPECT_EQ(same.kl, 0.0);
  EXPECT_NEAR(same.rhs, std::exp(-1.8 * same.p_miss), 1e-15);
  EXPECT_TRUE(same.holds);
  const auto all = mogulskii_lower(coin, coin.tilt(0.5), -INFINITY, 1.8, 10);
  EXPECT_EQ(all.lhs, 1.0);
  EXPECT_TRUE(all.holds);
}

TEST(Mogulskii, ConvolutionMatchesEnumeration) {
  Stream s(77);
  for (int i = 0; i < 50; ++i) {
    auto inst = cli::random_mogulskii_instance(s);
    inst.n = std::min(inst.n, 7);
    std::vector<oracle::Atom> atoms;
    for (const auto& [v, p] : inst.p.atoms()) atoms.push_back({v, p});
    const auto r = mogulskii_lower(inst.p, inst.q, inst.x, inst.M, inst.n);
    EXPECT_NEAR(r.p_event, oracle::enumerate_tail(atoms, inst.n, inst.x), 1e-12);
  }
}

TEST(Mogulskii, CostCap) {
  std::vector<DiscreteDistribution::Atom> a;
  for (int i = 0; i < 50; ++i) a.emplace_back(std::sqrt(2.0 + i), 1.0 / 50);
  EXPECT_THROW(sum_distribution(DiscreteDistribution(a), 30), ParameterError);
}

TEST(Bracket, StepContainsExact) {
  const auto m = validate_model(make_step(), 0.5);
  const auto c = compute_constants(m);
  for (double n : {400.0, 10000.0}) {
    const double x = 0.2;
    const auto b = certified_rate_bracket(m, c, std::nullopt, n, x);
    const double exact = -std::log(oracle::step_tail(static_cast<std::int64_t>(n), x)) / (n * x * x);
    EXPECT_LE(b.lower_rate, exact);
    EXPECT_GE(b.upper_rate, exact);
  }
}

TEST(Bracket, StepTheorem2Fixture) {
  const auto m = validate_model(make_step(), 0.5);
  const auto c = compute_constants(m);
  const double x = 0.3;
  const double n = 1e4 / (x * x);
  const auto b = certified_rate_bracket(m, c, std::nullopt, n, x, MRule::optimized());
  EXPECT_NEAR(b.lower_rate, 1.0 - std::log(std::cosh(0.3)) / 0.09, 1e-9);
  EXPECT_GE(b.upper_rate, 0.5);
  EXPECT_LE(b.upper_rate, 0.6);
  EXPECT_LE(b.lower_rate, b.upper_rate);
}

TEST(Bracket, Theorem3Fixture) {
  const auto m = validate_model(make_ar(0.45), 1e-14);
  const auto c = compute_constants(m);
  const auto ct = make_counterexample(0.45, 0.2, 1e-14, 0.01);
  const auto b = certified_rate_bracket(m, c, ct, 1e56, 0.01);
  EXPECT_NEAR(b.kl, oracle::counterexample_kl(0.45, 0.2, 1e-14, 0.01), 1e-9 * b.kl);
  EXPECT_NEAR(b.kl, 5.16e-6, 0.05e-6);
  EXPECT_NEAR(b.upper_rate, 0.052, 0.002);
  EXPECT_EQ(b.lower_rate, 0.0);
  EXPECT_FALSE(b.chernoff_available);
  EXPECT_DOUBLE_EQ(b.M, 1e56 * 1e-4);
}

TEST(Bracket, Thm3ScheduleDecreasing) {
  double prev = INFINITY;
  for (const auto& p : thm3_schedule(2, 6)) {
    const auto m = validate_model(make_ar(0.45), p.theta);
    const auto c = compute_constants(m);
    const auto b = counterexample_bracket(m, c, p.n, p.x);
    EXPECT_LT(b.upper_rate, prev) << p.k;
    prev = b.upper_rate;
  }
  EXPECT_LT(prev, 0.1);
}

TEST(Bracket, Preconditions) {
  const auto m = validate_model(make_step(), 0.5);
  const auto c = compute_constants(m);
  EXPECT_THROW(certified_rate_bracket(m, c, std::nullopt, 100, 0.0), ParameterError);
  EXPECT_THROW(counterexample_bracket(m, c, 100, 0.1), ParameterError);
}

TEST(MRuleText, RoundTrip) {
  for (const char* s : {"proof", "optimized", "1.5nx2"}) {
    EXPECT_EQ(to_string(parse_m_rule(s)), s);
  }
  EXPECT_THROW(parse_m_rule("big"), ConfigError);
}
