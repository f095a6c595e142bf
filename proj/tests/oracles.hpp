#pragma once

// Independent reference computations for the test suite. Nothing here calls
// the library's quantile, truncation, mixing or extreme-point code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "mfi/cdf.hpp"
#include "mfi/error.hpp"
#include "mfi/interval.hpp"
#include "mfi/lp.hpp"
#include "mfi/monotone_lp.hpp"
#include "mfi/security.hpp"

namespace oracle {

using mfi::Kind;
using mfi::PiecewiseCdf;

// Value of f at x from the raw tables.
inline double value_at(const PiecewiseCdf& f, double x) {
  const auto& g = f.grid();
  const auto& v = f.values();
  if (x < g.front()) return f.left_limits() ? (*f.left_limits())[0] : 0.0;
  std::size_t i = std::upper_bound(g.begin(), g.end(), x) - g.begin() - 1;
  if (f.kind() == Kind::Step || i + 1 == g.size()) return v[i];
  const double right = f.left_limits() ? (*f.left_limits())[i + 1] : v[i + 1];
  return v[i] + (right - v[i]) * (x - g[i]) / (g[i + 1] - g[i]);
}

// inf{x : G(x) >= tau} by scanning breakpoints and linear pieces.
inline double lower_quantile(const PiecewiseCdf& f, double tau, double tol = 1e-12) {
  const auto& g = f.grid();
  const auto& v = f.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (f.kind() == Kind::PiecewiseLinear && i > 0) {
      const double a = v[i - 1];
      const double b = f.left_limits() ? (*f.left_limits())[i] : v[i];
      if (a < tau - tol && b >= tau - tol) return g[i - 1] + (g[i] - g[i - 1]) * (tau - a) / (b - a);
    }
    if (v[i] >= tau - tol) return g[i];
  }
  return g.back();
}

// inf{x : G(x) > tau}.
inline double upper_quantile(const PiecewiseCdf& f, double tau, double tol = 1e-12) {
  const auto& g = f.grid();
  const auto& v = f.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (f.kind() == Kind::PiecewiseLinear && i > 0) {
      const double a = v[i - 1];
      const double b = f.left_limits() ? (*f.left_limits())[i] : v[i];
      if (a <= tau + tol && b > tau + tol) return g[i - 1] + (g[i] - g[i - 1]) * (tau - a) / (b - a);
    }
    if (v[i] > tau + tol) return g[i];
  }
  return g.back();
}

// Uniform prior on [0,1]: closed-form truncation bounds.
inline double uniform_left_bound(double x, double tau) { return std::clamp(x / tau, 0.0, 1.0); }
inline double uniform_right_bound(double x, double tau) { return std::clamp((x - tau) / (1.0 - tau), 0.0, 1.0); }

// Random step CDF with atoms on a subset of the grid.
inline PiecewiseCdf random_step_cdf(std::mt19937_64& rng, const std::vector<double>& grid) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(grid.size());
  double s = 0.0;
  for (double& x : w) {
    x = u(rng) < 0.4 ? 0.0 : u(rng);
    s += x;
  }
  if (s == 0.0) w[rng() % w.size()] = s = 1.0;
  std::vector<double> v(grid.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    acc += w[i] / s;
    v[i] = std::min(acc, 1.0);
  }
  v.back() = 1.0;
  return PiecewiseCdf(grid, v, Kind::Step);
}

// Strictly increasing piecewise-linear CDF from 0 at 0 to 1 at 1.
inline PiecewiseCdf random_full_support_prior(std::mt19937_64& rng, std::size_t cells) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> gx{0.0}, gv{0.0};
  double sx = 0.0, sv = 0.0;
  std::vector<double> dx(cells), dv(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    sx += dx[i] = u(rng);
    sv += dv[i] = u(rng);
  }
  double ax = 0.0, av = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    ax += dx[i] / sx;
    av += dv[i] / sv;
    gx.push_back(i + 1 == cells ? 1.0 : ax);
    gv.push_back(i + 1 == cells ? 1.0 : av);
  }
  return PiecewiseCdf(gx, gv, Kind::PiecewiseLinear);
}

// Every monotone payment vector in which each constant block either pays 0 or
// pays its first state in full: the extreme securities of I(0, x) on
// discrete states.
inline std::vector<std::vector<double>> debt_vertices(const std::vector<double>& states) {
  std::vector<std::vector<double>> out;
  std::vector<double> y;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == states.size()) {
      out.push_back(y);
      return;
    }
    const double prev = i == 0 ? 0.0 : y.back();
    for (double o : {prev, states[i]}) {
      y.push_back(o);
      rec(i + 1);
      y.pop_back();
      if (prev == states[i]) break;
    }
  };
  rec(0);
  return out;
}

inline double expect(const std::vector<double>& p, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * y[i];
  return s;
}

inline double issuer_value(const mfi::AdverseSelectionModel& m, const std::vector<double>& y, double z) {
  const double k = m.discount / (1.0 - m.discount);
  double s = 0.0;
  for (std::size_t j = 0; j < m.conditionals.size(); ++j) {
    const double e = expect(m.conditionals[j], y);
    if (e <= 0.0) return -INFINITY;
    s += m.signal_weights[j] * std::pow(e, -k);
  }
  return (1.0 - m.discount) * std::pow(z, 1.0 / (1.0 - m.discount)) * s;
}

// Best issuer value at fixed z among points of segments between pairs of
// unconstrained vertices that meet E[H | worst] = z. Every vertex of the
// constrained set lies on such a segment.
inline double adverse_selection_best(const mfi::AdverseSelectionModel& m, double z) {
  const auto verts = debt_vertices(m.states);
  const auto& w = m.conditionals[m.worst_signal];
  std::vector<double> e(verts.size());
  for (std::size_t i = 0; i < verts.size(); ++i) e[i] = expect(w, verts[i]);
  double best = -INFINITY;
  const double tol = 1e-12;
  for (std::size_t a = 0; a < verts.size(); ++a) {
    if (std::abs(e[a] - z) <= tol) best = std::max(best, issuer_value(m, verts[a], z));
    for (std::size_t b = a + 1; b < verts.size(); ++b) {
      const double lo = std::min(e[a], e[b]), hi = std::max(e[a], e[b]);
      if (!(lo < z && z < hi)) continue;
      const double t = (z - e[a]) / (e[b] - e[a]);
      std::vector<double> y(verts[a].size());
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = (1 - t) * verts[a][i] + t * verts[b][i];
      best = std::max(best, issuer_value(m, y, z));
    }
  }
  return best;
}

// Feasibility of a distribution in I(F_R^{tau,eps}, F_L^{tau,eps}) whose left
// limits at the interior partition points equal the cumulative shares.
inline bool shares_attainable(const PiecewiseCdf& prior, double tau, const std::vector<double>& partition,
                              const std::vector<double>& shares, double eps = 1e-7) {
  mfi::MonotoneLp lp(mfi::quantile_interval(prior, tau, eps), Kind::PiecewiseLinear, partition);
  lp.objective.assign(lp.size(), 0.0);
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < shares.size(); ++k) {
    cum += shares[k];
    const double z = partition[k + 1];
    std::size_t idx = lp.size();
    for (std::size_t j = 0; j < lp.size(); ++j) {
      if (lp.layout.knots[j].x == z && lp.layout.knots[j].side == mfi::Side::Left) idx = j;
    }
    if (idx == lp.size()) return false;
    mfi::LinearConstraint c;
    c.weights.assign(lp.size(), 0.0);
    c.weights[idx] = 1.0;
    c.relation = mfi::lp::Relation::Equal;
    c.rhs = cum;
    lp.constraints.push_back(c);
  }
  try {
    mfi::solve(lp);
    return true;
  } catch (const mfi::Error&) {
    return false;
  }
}

}  // namespace oracle
