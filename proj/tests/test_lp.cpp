#include <gtest/gtest.h>

#include <random>
#include <set>

#include "mfi/error.hpp"
#include "mfi/lp.hpp"
#include "mfi/monotone_lp.hpp"
#include "oracles.hpp"

using namespace mfi;

TEST(Simplex, SmallTextbookProblem) {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36.
  lp::Problem p{{3, 5}, {{{1, 0}, lp::Relation::LessEq, 4}, {{0, 2}, lp::Relation::LessEq, 12},
                         {{3, 2}, lp::Relation::LessEq, 18}}};
  const auto r = lp::solve(p);
  ASSERT_EQ(r.status, lp::Status::Optimal);
  EXPECT_NEAR(r.value, 36.0, 1e-12);
  EXPECT_NEAR(r.x[0], 2.0, 1e-12);
  EXPECT_NEAR(r.x[1], 6.0, 1e-12);
  EXPECT_LE(std::abs(r.duality_gap), 1e-10);
}

TEST(Simplex, DetectsInfeasibleAndUnbounded) {
  lp::Problem inf{{1}, {{{1}, lp::Relation::GreaterEq, 2}, {{1}, lp::Relation::LessEq, 1}}};
  EXPECT_EQ(lp::solve(inf).status, lp::Status::Infeasible);
  lp::Problem unb{{1, 1}, {{{1, -1}, lp::Relation::LessEq, 1}}};
  EXPECT_EQ(lp::solve(unb).status, lp::Status::Unbounded);
}

TEST(Simplex, RedundantEqualities) {
  lp::Problem p{{1, 1, 1},
                {{{1, 1, 0}, lp::Relation::Equal, 1},
                 {{2, 2, 0}, lp::Relation::Equal, 2},
                 {{0, 1, 1}, lp::Relation::Equal, 1},
                 {{1, 2, 1}, lp::Relation::Equal, 2}}};
  const auto r = lp::solve(p);
  ASSERT_EQ(r.status, lp::Status::Optimal);
  EXPECT_NEAR(r.value, 2.0, 1e-12);
}

TEST(MonotoneLpSolve, QuadraticPayoffWorkedValue) {
  const auto f = PiecewiseCdf::uniform(0.0, 1.0);
  MonotoneLp lp(quantile_interval(f, 0.5), Kind::PiecewiseLinear, {0.3});
  Integrand v;
  v.grid = {0.0, 1.0};
  v.analytic = [](double x) { return -(x - 0.3) * (x - 0.3); };
  lp.objective = lp.stieltjes_weights(v);
  const auto s = solve(lp);
  EXPECT_NEAR(s.value, -2.0 * 0.008 / 3.0, 1e-12);
  // Optimum pools everything below the peak: 0 before 0.3, then min(2x, 1).
  EXPECT_NEAR(s.h(0.29), 0.0, 1e-12);
  EXPECT_NEAR(s.h(0.3), 0.6, 1e-12);
  EXPECT_NEAR(s.h(0.45), 0.9, 1e-12);
  EXPECT_TRUE(s.structure.is_extreme);
}

TEST(MonotoneLpSolve, ZeroObjectiveGivesZero) {
  MonotoneLp lp(quantile_interval(PiecewiseCdf::uniform(0.0, 1.0), 0.5), Kind::PiecewiseLinear);
  const auto s = solve(lp);
  EXPECT_EQ(s.value, 0.0);
  EXPECT_TRUE(contains(lp.interval, s.h));
}

TEST(MonotoneLpSolve, UnattainableEqualityIsInfeasible) {
  const std::vector<double> states{0.25, 0.5, 0.75, 1.0};
  MonotoneLp lp(security_interval(states), Kind::Step);
  LinearConstraint c;
  c.weights = lp.point_weights(states, {0.25, 0.25, 0.25, 0.25});
  c.relation = lp::Relation::Equal;
  c.rhs = 0.9;  // above E[x] = 0.625
  lp.constraints.push_back(c);
  try {
    solve(lp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Infeasible);
  }
  EXPECT_TRUE(enumerate_vertices(lp, 1000).empty());
}

TEST(MonotoneLpSolve, MaxEqualsMinusMinOfNegation) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = oracle::random_full_support_prior(rng, 4);
    MonotoneLp lp(quantile_interval(f, 0.4), Kind::PiecewiseLinear);
    for (double& w : lp.objective) w = u(rng);
    const double vmax = solve(lp).value;
    for (double& w : lp.objective) w = -w;
    lp.sense = Sense::Min;
    EXPECT_NEAR(vmax, -solve(lp).value, 1e-9);
  }
}

TEST(MonotoneLpSolve, ResidualsAndContainment) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<double> states{0.1, 0.3, 0.5, 0.7, 0.9, 1.0};
  for (int trial = 0; trial < 30; ++trial) {
    MonotoneLp lp(security_interval(states), Kind::Step);
    std::vector<double> p(states.size());
    double s = 0;
    for (double& x : p) s += x = u(rng) + 0.05;
    for (double& x : p) x /= s;
    lp.objective = lp.point_weights(states, p);
    for (double& x : lp.objective) x *= -1;
    LinearConstraint c;
    c.weights = lp.point_weights(states, p);
    c.relation = lp::Relation::GreaterEq;
    c.rhs = 0.3 * oracle::expect(p, states);
    lp.constraints.push_back(c);
    const auto sol = solve(lp);
    EXPECT_LE(sol.max_residual, 1e-8);
    EXPECT_TRUE(contains(lp.interval, sol.h));
  }
}

TEST(Stieltjes, PointMassesCountAtTheirLocation) {
  Integrand v;
  v.grid = {0.0, 1.0};
  v.values = {0.0, 2.0};
  EXPECT_NEAR(stieltjes(v, PiecewiseCdf::dirac(0.25)), 0.5, 1e-15);
  EXPECT_NEAR(stieltjes(v, PiecewiseCdf::uniform(0.0, 1.0)), 1.0, 1e-15);
}

TEST(EnumerateVertices, UnconstrainedSecurityVerticesMatchBruteForce) {
  const std::vector<double> states{0.2, 0.5, 0.8};
  MonotoneLp lp(security_interval(states), Kind::Step);
  const auto verts = enumerate_vertices(lp, 10000);
  std::set<std::vector<long long>> got, want;
  auto key = [](const std::vector<double>& y) {
    std::vector<long long> k;
    for (double x : y) k.push_back(std::llround(x * 1e9));
    return k;
  };
  for (const auto& v : verts) {
    got.insert(key({v.knot_values.begin() + 1, v.knot_values.end()}));
    EXPECT_TRUE(is_extreme_point(lp.interval, v.h).is_extreme);
  }
  for (const auto& y : oracle::debt_vertices(states)) want.insert(key(y));
  EXPECT_EQ(got, want);
}

TEST(EnumerateVertices, OneEqualityLeavesAtMostOneFlatBelowTheDiagonal) {
  const std::vector<double> states{0.1, 0.3, 0.5, 0.7, 0.9};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    MonotoneLp lp(security_interval(states), Kind::Step);
    std::vector<double> p(states.size());
    double s = 0;
    for (double& x : p) s += x = u(rng);
    for (double& x : p) x /= s;
    LinearConstraint c;
    c.weights = lp.point_weights(states, p);
    c.relation = lp::Relation::Equal;
    c.rhs = 0.5 * oracle::expect(p, states);
    lp.constraints.push_back(c);
    for (const auto& v : enumerate_vertices(lp, 100000)) {
      EXPECT_LE(extract_contingent_debt(v.h).non_defaultable_count(), 1u);
    }
  }
}

TEST(EnumerateVertices, BudgetExceeded) {
  const std::vector<double> states{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  MonotoneLp lp(security_interval(states), Kind::Step);
  try {
    enumerate_vertices(lp, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BudgetExceeded);
  }
}
