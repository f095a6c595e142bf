#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mfi/error.hpp"
#include "mfi/persuasion.hpp"
#include "oracles.hpp"

using namespace mfi;

namespace {

const PiecewiseCdf kUniform = PiecewiseCdf::uniform(0.0, 1.0);
const double kWorked = -2.0 * 0.2 * 0.2 * 0.2 / 3.0;

SenderPayoff analytic(std::function<double(double)> f, ShapeHint shape, std::optional<double> peak = std::nullopt) {
  SenderPayoff p;
  p.v.analytic = std::move(f);
  p.shape = shape;
  p.peak = peak;
  return p;
}

SenderPayoff tabulated(const std::function<double(double)>& f, ShapeHint shape, std::size_t n = 201) {
  SenderPayoff p;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / (n - 1);
    p.v.grid.push_back(x);
    p.v.values.push_back(f(x));
  }
  p.shape = shape;
  return p;
}

}  // namespace

TEST(Persuasion, PeakBelowMedianPoolsLeft) {
  const auto p = analytic([](double x) { return -(x - 0.3) * (x - 0.3); }, ShapeHint::QuasiConcave, 0.3);
  const auto r = solve_persuasion(kUniform, 0.5, p);
  ASSERT_TRUE(r.closed_form.has_value());
  EXPECT_EQ(r.closed_form->kind, CandidateKind::LeftPooled);
  EXPECT_NEAR(r.closed_form->value, kWorked, 1e-9);
  EXPECT_NEAR(r.value, kWorked, 1e-9);
  EXPECT_TRUE(r.concordant);
  const auto& h = r.closed_form->h;
  EXPECT_EQ(h(0.29), 0.0);
  EXPECT_NEAR(h(0.3), 0.6, 1e-12);
  EXPECT_EQ(h(0.5), 1.0);
}

TEST(Persuasion, PeakAboveMedianPoolsRight) {
  const auto p = analytic([](double x) { return -(x - 0.7) * (x - 0.7); }, ShapeHint::QuasiConcave, 0.7);
  const auto r = solve_persuasion(kUniform, 0.5, p);
  ASSERT_TRUE(r.closed_form.has_value());
  EXPECT_EQ(r.closed_form->kind, CandidateKind::RightPooled);
  EXPECT_NEAR(r.value, kWorked, 1e-9);
  const auto& h = r.closed_form->h;
  EXPECT_NEAR(h(0.6), 0.2, 1e-12);
  EXPECT_EQ(h(0.7), 1.0);
}

TEST(Persuasion, ConvexPayoffNeverSettlesForThePrior) {
  const auto p = analytic([](double x) { return (x - 0.5) * (x - 0.5); }, ShapeHint::StrictlyQuasiConvex);
  const auto r = solve_persuasion(kUniform, 0.5, p);
  ASSERT_TRUE(r.closed_form.has_value());
  EXPECT_EQ(r.closed_form->kind, CandidateKind::Central);
  EXPECT_TRUE(r.concordant);
  Integrand v = p.v;
  EXPECT_GT(r.value, stieltjes(v, kUniform) + 1e-6);
  EXPECT_GT(sup_distance(r.h, kUniform), 1e-3);
}

TEST(Persuasion, ConstantPayoff) {
  const auto p = tabulated([](double) { return 2.5; }, ShapeHint::General);
  EXPECT_NEAR(solve_persuasion(kUniform, 0.5, p).value, 2.5, 1e-12);
}

TEST(Persuasion, IdentityPayoffPushesMassRight) {
  const auto p = tabulated([](double x) { return x; }, ShapeHint::General, 2);
  const auto r = solve_persuasion(kUniform, 0.5, p);
  EXPECT_NEAR(r.value, 0.75, 1e-12);
  EXPECT_LE(sup_distance(r.h, truncation_bounds(kUniform, 0.5).lower), 1e-12);
}

TEST(Persuasion, InvalidShapeHint) {
  auto p = tabulated([](double x) { return std::sin(12 * x); }, ShapeHint::QuasiConcave);
  try {
    solve_persuasion(kUniform, 0.5, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeHintInvalid);
  }
  p.shape = ShapeHint::StrictlyQuasiConvex;
  EXPECT_THROW(solve_persuasion(kUniform, 0.5, p), Error);
}

TEST(Persuasion, ClosedFormNeedsFullSupport) {
  const auto p = tabulated([](double x) { return -(x - 0.3) * (x - 0.3); }, ShapeHint::QuasiConcave);
  try {
    closed_form_candidate(PiecewiseCdf::dirac(0.4), 0.5, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FullSupportRequired);
  }
}

TEST(Persuasion, OptimumBeatsSampledExtremePoints) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto prior = oracle::random_full_support_prior(rng, 4);
    SenderPayoff p;
    for (int i = 0; i <= 10; ++i) {
      p.v.grid.push_back(i / 10.0);
      p.v.values.push_back(u(rng));
    }
    const auto r = solve_persuasion(prior, 0.4, p);
    const auto iv = quantile_interval(prior, 0.4);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      EXPECT_GE(r.value, stieltjes(p.v, sample_extreme_point(iv, seed)) - 1e-9);
    }
  }
}

TEST(Persuasion, IncreasingTransformKeepsTheOptimizer) {
  const auto base = tabulated([](double x) { return -(x - 0.35) * (x - 0.35); }, ShapeHint::QuasiConcave);
  auto shifted = base;
  for (double& y : shifted.v.values) y = std::exp(8.0 * y) + 3.0;
  const auto r0 = solve_persuasion(kUniform, 0.5, base);
  const auto r1 = solve_persuasion(kUniform, 0.5, shifted);
  // r0's optimizer is optimal for the transformed payoff as well.
  EXPECT_NEAR(stieltjes(shifted.v, r0.h), r1.value, 1e-9);
  ASSERT_TRUE(r0.closed_form && r1.closed_form);
  EXPECT_LE(sup_distance(r0.closed_form->h, r1.closed_form->h), 1e-12);
}

TEST(Persuasion, RandomShapesAreConcordant) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.05, 0.95), s(0.5, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto prior = oracle::random_full_support_prior(rng, 5);
    const double tau = u(rng), a = u(rng), k = s(rng);
    const auto cave = tabulated([&](double x) { return -std::pow(std::abs(x - a), k); }, ShapeHint::QuasiConcave, 41);
    const auto vex = tabulated([&](double x) { return std::pow(std::abs(x - a), k) + 0.1 * x; },
                               ShapeHint::StrictlyQuasiConvex, 41);
    for (const auto* p : {&cave, &vex}) {
      const auto r = solve_persuasion(prior, tau, *p);
      EXPECT_TRUE(r.concordant) << trial << " gap " << r.concordance_gap;
    }
  }
}
