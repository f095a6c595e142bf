#include <gtest/gtest.h>

#include <random>

#include "mfi/error.hpp"
#include "mfi/posterior.hpp"
#include "oracles.hpp"

using namespace mfi;

namespace {

const PiecewiseCdf kUniform = PiecewiseCdf::uniform(0.0, 1.0);

PiecewiseCdf uniform_grid(std::size_t cells) {
  std::vector<double> g;
  for (std::size_t i = 0; i <= cells; ++i) g.push_back(static_cast<double>(i) / cells);
  return PiecewiseCdf(g, g, Kind::PiecewiseLinear);
}

FiniteSignal random_signal(std::mt19937_64& rng, const std::vector<double>& grid, std::size_t k) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  FiniteSignal s;
  double total = 0.0;
  std::vector<double> w(k);
  for (double& x : w) total += x = u(rng);
  for (std::size_t i = 0; i < k; ++i) s.components.emplace_back(w[i] / total, oracle::random_step_cdf(rng, grid));
  s.prior = mix(s.components);
  return s;
}

void expect_round_trip(const PiecewiseCdf& h, const PiecewiseCdf& prior, double tau) {
  const auto c = construct_signal(h, prior, tau);
  const auto r = verify_signal(c.signal, prior, tau, h, 0, 0, c.rule);
  EXPECT_TRUE(r.weights_valid);
  EXPECT_LE(r.bayes_gap, 1e-9);
  ASSERT_TRUE(r.quantile_gap_rule.has_value());
  EXPECT_LE(*r.quantile_gap_rule, 1e-6);
}

}  // namespace

TEST(QuantileDistribution, UninformativeSignalGivesMedianAtom) {
  const FiniteSignal s{kUniform, {{1.0, kUniform}}};
  const auto h = quantile_distribution(s, 0.5, {});
  EXPECT_EQ(h(0.5 - 1e-12), 0.0);
  EXPECT_EQ(h(0.5), 1.0);
}

TEST(QuantileDistribution, DegeneratePosteriors) {
  const auto a = PiecewiseCdf::dirac(0.2), b = PiecewiseCdf::dirac(0.8);
  const FiniteSignal s{mix({{0.5, a}, {0.5, b}}), {{0.5, a}, {0.5, b}}};
  for (double tau : {0.1, 0.5, 0.9}) {
    const auto h = quantile_distribution(s, tau, {SelectionMode::AlwaysUpper, {}});
    EXPECT_EQ(h(0.19), 0.0);
    EXPECT_EQ(h(0.2), 0.5);
    EXPECT_EQ(h(0.8), 1.0);
  }
}

TEST(QuantileDistribution, FullyRevealingReproducesDiscretePrior) {
  std::vector<double> g{0.1, 0.3, 0.5, 0.7, 0.9};
  const PiecewiseCdf prior(g, {0.2, 0.4, 0.6, 0.8, 1.0}, Kind::Step);
  FiniteSignal s{prior, {}};
  for (double x : g) s.components.emplace_back(0.2, PiecewiseCdf::dirac(x));
  EXPECT_LE(sup_distance(quantile_distribution(s, 0.5, {}), prior), 1e-12);
}

TEST(QuantileDistribution, RejectsPointsOutsideQuantileSet) {
  const FiniteSignal s{kUniform, {{1.0, kUniform}}};
  EXPECT_THROW(quantile_distribution(s, 0.5, {SelectionMode::PerComponent, {0.7}}), Error);
  const auto h = quantile_distribution(s, 0.5, {SelectionMode::PerComponent, {0.5}});
  EXPECT_EQ(h(0.5), 1.0);
}

TEST(Feasible, Examples) {
  EXPECT_TRUE(feasible(kUniform, kUniform, 0.5));
  EXPECT_FALSE(feasible(PiecewiseCdf::dirac(0.9), kUniform, 0.5));
  EXPECT_TRUE(feasible(PiecewiseCdf::dirac(0.5), kUniform, 0.5));
}

// Selected quantiles computed by the scan oracle, bounds from the closed
// formulas at each point: no library quantile or truncation code involved.
TEST(Sandwich, RandomSignalsStayBetweenTruncations) {
  std::mt19937_64 rng(2024);
  const std::vector<double> grid{0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9, 1.0};
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_signal(rng, grid, 2 + trial % 5);
    for (double tau : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      for (bool upper : {false, true}) {
        std::vector<std::pair<double, double>> atoms;
        for (const auto& [w, g] : s.components) {
          atoms.emplace_back(upper ? oracle::upper_quantile(g, tau) : oracle::lower_quantile(g, tau), w);
        }
        for (double x : grid) {
          double h = 0.0, f = 0.0;
          for (const auto& [q, w] : atoms) h += q <= x ? w : 0.0;
          for (const auto& [w, g] : s.components) f += w * oracle::value_at(g, x);
          EXPECT_LE(h, std::min(f / tau, 1.0) + 1e-9);
          EXPECT_GE(h, std::max((f - tau) / (1 - tau), 0.0) - 1e-9);
        }
      }
    }
  }
}

TEST(ConstructSignal, MedianAtomIsUninformative) {
  const auto c = construct_signal(PiecewiseCdf::dirac(0.5), kUniform, 0.5);
  ASSERT_EQ(c.signal.components.size(), 1u);
  EXPECT_NEAR(c.signal.components[0].first, 1.0, 1e-12);
  EXPECT_LE(sup_distance(c.signal.components[0].second, kUniform), 1e-12);
  EXPECT_EQ(c.rule.mode, SelectionMode::AlwaysLower);
}

TEST(ConstructSignal, TwoSidedPooling) {
  // F_L below 1/4, flat at 1/2 on [1/4, 3/4), F_R from 3/4 on.
  const PiecewiseCdf h({0.0, 0.25, 0.75, 1.0}, {0.0, 0.5, 0.5, 1.0}, Kind::PiecewiseLinear,
                       std::vector<double>{0.0, 0.5, 0.5, 1.0});
  const auto iv = quantile_interval(kUniform, 0.5);
  ASSERT_TRUE(is_extreme_point(iv, h).is_extreme);
  const auto c = construct_signal(h, kUniform, 0.5);
  ASSERT_EQ(c.plans.size(), 1u);
  const auto& p = c.plans[0];
  // Atomizing the rising piece from 3/4 moves the block ends by O(1e-10).
  EXPECT_NEAR(p.x_low, 0.25, 1e-9);
  EXPECT_NEAR(p.x_high, 0.75, 1e-9);
  EXPECT_FALSE(p.pooled_left.empty());
  EXPECT_FALSE(p.pooled_right.empty());
  EXPECT_GE(p.alpha, 0.0);
  EXPECT_LE(p.alpha, 1.0);
  // Each separated tail state is a tau-quantile of its pooled posterior.
  for (const auto* side : {&p.pooled_left, &p.pooled_right}) {
    for (const auto& q : *side) {
      const auto& g = c.signal.components[q.component].second;
      EXPECT_LE(quantile(g, 0.5, QuantileSide::Lower), q.point + 1e-9);
      EXPECT_GE(quantile(g, 0.5, QuantileSide::Upper), q.point - 1e-9);
    }
  }
  expect_round_trip(h, kUniform, 0.5);
}

TEST(ConstructSignal, SplitOfThePriorHoldsInEveryPlan) {
  const auto iv = quantile_interval(kUniform, 0.3);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto c = construct_signal(sample_extreme_point(iv, seed), kUniform, 0.3);
    for (const auto& p : c.plans) {
      if (!p.F_hat || !p.F_tilde) continue;
      EXPECT_LE(sup_distance(mix({{p.eta, *p.F_hat}, {1 - p.eta, *p.F_tilde}}), kUniform), 1e-9);
      if (p.x_hat && p.eta > 0) {
        EXPECT_LE(quantile(*p.F_hat, 0.3, QuantileSide::Lower), *p.x_hat + 1e-12);
        EXPECT_GE(quantile(*p.F_hat, 0.3, QuantileSide::Upper), *p.x_hat - 1e-12);
      }
    }
  }
}

TEST(ConstructSignal, PriorOnTwentyCellGrid) { expect_round_trip(uniform_grid(20), uniform_grid(20), 0.5); }

TEST(ConstructSignal, SampledExtremePointsOnRandomPriors) {
  std::mt19937_64 rng(77);
  const std::vector<double> grid{0.0, 0.2, 0.35, 0.5, 0.8, 1.0};
  for (int trial = 0; trial < 60; ++trial) {
    const auto prior = trial % 2 ? oracle::random_full_support_prior(rng, 4) : oracle::random_step_cdf(rng, grid);
    const double tau = 0.2 + 0.6 * (trial % 4) / 3.0;
    const auto iv = quantile_interval(prior, tau);
    expect_round_trip(sample_extreme_point(iv, trial), prior, tau);
  }
}

TEST(ConstructSignal, MixturesOfExtremePoints) {
  const auto prior = uniform_grid(6);
  const auto iv = quantile_interval(prior, 0.4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto h = mix({{0.3, sample_extreme_point(iv, 3 * seed)},
                        {0.5, sample_extreme_point(iv, 3 * seed + 1)},
                        {0.2, sample_extreme_point(iv, 3 * seed + 2)}});
    expect_round_trip(h, prior, 0.4);
  }
}

TEST(ConstructSignal, InfeasibleTarget) {
  try {
    construct_signal(PiecewiseCdf::dirac(0.9), kUniform, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleTarget);
  }
}

TEST(ConstructUnique, MedianAtomWithWideMargin) {
  const auto c = construct_signal_unique(PiecewiseCdf::dirac(0.5), kUniform, 0.5, 0.25);
  EXPECT_TRUE(c.report.all_unique);
  const auto r = verify_signal(c.signal, kUniform, 0.5, PiecewiseCdf::dirac(0.5), 0, 0, c.rule);
  EXPECT_LE(r.bayes_gap, 1e-9);
  EXPECT_LE(r.quantile_gap_lower, 1e-6);
  EXPECT_LE(r.quantile_gap_upper, 1e-6);
}

TEST(ConstructUnique, EmptyIntervalForLargeEpsilon) {
  try {
    construct_signal_unique(PiecewiseCdf::dirac(0.5), kUniform, 0.5, 0.6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInterval);
  }
}

TEST(ConstructUnique, RequiresFullSupport) {
  EXPECT_THROW(construct_signal_unique(PiecewiseCdf::dirac(0.5), PiecewiseCdf::dirac(0.5), 0.5, 0.1), Error);
}

// The perturbed upper bound jumps to 1 at the median while carrying mass
// below it. Posteriors with a unique quantile below the median put more than
// tau on [0, median], and nothing can offset that, so the construction must
// report the obstruction instead of claiming uniqueness.
TEST(ConstructUnique, UpperEpsilonBoundSitsOnTheCorner) {
  const auto b = truncation_bounds(kUniform, 0.5, 0.1);
  const auto c = construct_signal_unique(b.upper, kUniform, 0.5, 0.1);
  EXPECT_TRUE(c.report.corner_obstruction);
  EXPECT_FALSE(c.report.all_unique);
  const auto r = verify_signal(c.signal, kUniform, 0.5, b.upper, 0, 0, c.rule);
  EXPECT_LE(r.bayes_gap, 1e-9);
}

TEST(ConstructUnique, InteriorTargetsHaveUniqueQuantiles) {
  const auto iv = quantile_interval(kUniform, 0.5, 0.05);
  const PiecewiseCdf mid = mix({{0.5, *iv.lower}, {0.5, *iv.upper}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto h = mix({{0.7, sample_extreme_point(iv, seed)}, {0.3, mid}});
    const auto c = construct_signal_unique(h, kUniform, 0.5, 0.05);
    EXPECT_FALSE(c.report.corner_obstruction);
    EXPECT_TRUE(c.report.all_unique);
    for (const auto& e : c.report.components) EXPECT_EQ(e.lower, e.upper);
  }
}

TEST(ConstructUnique, DiscreteTargetReproducedExactly) {
  const PiecewiseCdf h({0.3, 0.5, 0.7}, {0.3, 0.6, 1.0}, Kind::Step);
  const auto c = construct_signal_unique(h, kUniform, 0.5, 0.05);
  EXPECT_TRUE(c.report.all_unique);
  const auto r = verify_signal(c.signal, kUniform, 0.5, h, 0, 0, c.rule);
  EXPECT_LE(r.bayes_gap, 1e-9);
  EXPECT_LE(r.quantile_gap_lower, 1e-6);
  EXPECT_LE(r.quantile_gap_upper, 1e-6);
}

TEST(VerifySignal, UninformativeSignalHasNoGaps) {
  const FiniteSignal s{kUniform, {{1.0, kUniform}}};
  const auto r = verify_signal(s, kUniform, 0.5, PiecewiseCdf::dirac(0.5), 1000, 1);
  EXPECT_EQ(r.bayes_gap, 0.0);
  EXPECT_EQ(r.quantile_gap_lower, 0.0);
  EXPECT_EQ(r.quantile_gap_upper, 0.0);
  ASSERT_TRUE(r.monte_carlo.has_value());
  EXPECT_EQ(r.monte_carlo->quantile_gap, 0.0);
}

TEST(VerifySignal, CorruptedWeightsAreReported) {
  const FiniteSignal s{kUniform, {{0.6, kUniform}, {0.6, kUniform}}};
  const auto r = verify_signal(s, kUniform, 0.5, PiecewiseCdf::dirac(0.5), 0, 0);
  EXPECT_FALSE(r.weights_valid);
  EXPECT_NEAR(r.weight_sum, 1.2, 1e-15);
}

TEST(VerifySignal, MonteCarloIndependentOfThreadCount) {
  const auto iv = quantile_interval(kUniform, 0.5);
  const auto h = sample_extreme_point(iv, 5);
  const auto c = construct_signal(h, kUniform, 0.5);
  const auto a = verify_signal(c.signal, kUniform, 0.5, h, 20000, 99, c.rule, 1);
  const auto b = verify_signal(c.signal, kUniform, 0.5, h, 20000, 99, c.rule, 4);
  ASSERT_TRUE(a.monte_carlo && b.monte_carlo);
  EXPECT_EQ(a.monte_carlo->quantile_gap, b.monte_carlo->quantile_gap);
  EXPECT_EQ(a.monte_carlo->state_gap, b.monte_carlo->state_gap);
  EXPECT_NEAR(a.monte_carlo->dkw_epsilon, std::sqrt(std::log(2 / 0.05) / (2 * 20000.0)), 1e-15);
}

TEST(IteratedQuantiles, Examples) {
  auto [lo, hi] = iterated_quantile_range(kUniform, 0.5, 0.5);
  EXPECT_NEAR(lo, 0.25, 1e-12);
  EXPECT_NEAR(hi, 0.75, 1e-12);
  std::tie(lo, hi) = iterated_quantile_range(kUniform, 0.25, 0.5);
  EXPECT_NEAR(lo, 0.125, 1e-12);
  EXPECT_NEAR(hi, 0.625, 1e-12);
  std::tie(lo, hi) = iterated_quantile_range(PiecewiseCdf::dirac(0.4), 0.3, 0.7);
  EXPECT_EQ(lo, 0.4);
  EXPECT_EQ(hi, 0.4);
}

TEST(IteratedQuantiles, ContainsQuantilesOfEveryFeasibleDistribution) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const auto f = oracle::random_full_support_prior(rng, 5);
    const double q = 0.2 + 0.15 * (trial % 5);
    const auto iv = quantile_interval(f, q);
    for (double tau : {0.2, 0.5, 0.8}) {
      const auto [lo, hi] = iterated_quantile_range(f, tau, q);
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto h = sample_extreme_point(iv, seed + 10 * trial);
        EXPECT_GE(quantile(h, tau, QuantileSide::Lower), lo - 1e-12);
        EXPECT_LE(quantile(h, tau, QuantileSide::Upper), hi + 1e-12);
      }
    }
  }
}
