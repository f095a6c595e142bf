#include "mfi/monotone_lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mfi/error.hpp"

namespace mfi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-9;

}  // namespace

KnotLayout make_layout(const MonotoneInterval& iv, Kind kind, const std::vector<double>& extra_points) {
  if (!iv.bounded()) throw Error(ErrorCode::InvalidArgument, "discretization needs both bounds");
  const auto& L = *iv.lower;
  const auto& U = *iv.upper;
  KnotLayout out;
  out.kind = kind;
  out.grid = merge_grids({&L, &U}, extra_points);
  const auto& g = out.grid;
  const std::size_t n = g.size();
  if (kind == Kind::Step) {
    out.knots.push_back({g[0], Side::Left, L(g[0], Side::Left), U.tail()});
    for (std::size_t j = 0; j < n; ++j) {
      const double lo = j + 1 < n ? L(g[j + 1], Side::Left) : L.final_value();
      out.knots.push_back({g[j], Side::Right, lo, U(g[j])});
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      out.knots.push_back({g[j], Side::Left, L(g[j], Side::Left), U(g[j], Side::Left)});
      out.knots.push_back({g[j], Side::Right, L(g[j]), U(g[j])});
    }
  }
  return out;
}

PiecewiseCdf KnotLayout::to_function(const std::vector<double>& y) const {
  const std::size_t n = grid.size();
  std::vector<double> values(n), ll(n);
  if (kind == Kind::Step) {
    for (std::size_t j = 0; j < n; ++j) {
      values[j] = y[j + 1];
      ll[j] = y[j];
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      ll[j] = y[2 * j];
      values[j] = y[2 * j + 1];
    }
  }
  return canonical(PiecewiseCdf(grid, std::move(values), kind, std::move(ll)));
}

std::vector<double> KnotLayout::from_function(const PiecewiseCdf& h) const {
  std::vector<double> y;
  y.reserve(knots.size());
  for (const auto& k : knots) y.push_back(h(k.x, k.side));
  return y;
}

std::vector<std::pair<std::size_t, double>> KnotLayout::evaluation(double x) const {
  if (x < grid.front()) return {{0, 1.0}};
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const auto j = static_cast<std::size_t>(it - grid.begin()) - 1;
  if (kind == Kind::Step) return {{j + 1, 1.0}};
  if (x == grid[j] || j + 1 == grid.size()) return {{2 * j + 1, 1.0}};
  const double t = (x - grid[j]) / (grid[j + 1] - grid[j]);
  return {{2 * j + 1, 1.0 - t}, {2 * j + 2, t}};
}

double Integrand::operator()(double x) const {
  if (analytic) return analytic(x);
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty integrand");
  if (x <= grid.front()) return values.front();
  if (x >= grid.back()) return values.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const auto j = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double t = (x - grid[j]) / (grid[j + 1] - grid[j]);
  return values[j] + t * (values[j + 1] - values[j]);
}

double Integrand::mean(double a, double b) const {
  if (!(b > a)) return (*this)(a);
  std::vector<double> pts{a};
  for (double g : grid) {
    if (g > a && g < b) pts.push_back(g);
  }
  pts.push_back(b);
  long double total = 0.0L;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double p = pts[i], q = pts[i + 1];
    if (analytic) {
      static constexpr double node[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                         0.9061798459386640};
      static constexpr double weight[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                           0.2369268850561891, 0.2369268850561891};
      const double c = 0.5 * (p + q), r = 0.5 * (q - p);
      long double s = 0.0L;
      for (int k = 0; k < 5; ++k) s += weight[k] * analytic(c + r * node[k]);
      total += s * r;
    } else {
      total += 0.5L * ((*this)(p) + (*this)(q)) * (q - p);
    }
  }
  return static_cast<double>(total / (b - a));
}

double stieltjes(const Integrand& v, const PiecewiseCdf& h) {
  long double total = 0.0L;
  const auto& g = h.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double jump = h.values()[i] - h.left_limit(i);
    if (jump != 0.0) total += static_cast<long double>(v(g[i])) * jump;
    if (h.kind() == Kind::PiecewiseLinear && i + 1 < g.size()) {
      const double rise = h.left_limit(i + 1) - h.values()[i];
      if (rise != 0.0) total += static_cast<long double>(v.mean(g[i], g[i + 1])) * rise;
    }
  }
  return static_cast<double>(total);
}

MonotoneLp::MonotoneLp(MonotoneInterval iv, Kind kind, const std::vector<double>& extra_points)
    : interval(std::move(iv)), layout(make_layout(interval, kind, extra_points)), objective(layout.size(), 0.0) {}

std::vector<double> MonotoneLp::stieltjes_weights(const Integrand& v) const {
  const std::size_t n = layout.size();
  std::vector<double> m(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (layout.kind == Kind::Step) {
      m[k] = v(layout.grid[k]);
    } else if (k % 2 == 0) {
      m[k] = v(layout.grid[k / 2]);
    } else {
      const std::size_t j = k / 2;
      m[k] = v.mean(layout.grid[j], layout.grid[j + 1]);
    }
  }
  std::vector<double> w(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double before = k > 0 ? m[k - 1] : 0.0;
    const double after = k + 1 < n ? m[k] : 0.0;
    w[k] = before - after;
  }
  return w;
}

std::vector<double> MonotoneLp::point_weights(const std::vector<double>& states,
                                              const std::vector<double>& mass) const {
  if (states.size() != mass.size()) throw Error(ErrorCode::InvalidArgument, "states and masses differ in length");
  std::vector<double> w(layout.size(), 0.0);
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (const auto& [k, c] : layout.evaluation(states[s])) w[k] += c * mass[s];
  }
  return w;
}

double MonotoneLp::evaluate_objective(const std::vector<double>& y) const {
  long double s = objective_constant;
  for (std::size_t k = 0; k < y.size(); ++k) s += static_cast<long double>(objective[k]) * y[k];
  return static_cast<double>(s);
}

namespace {

double residual(const LinearConstraint& c, const std::vector<double>& y) {
  long double s = -c.rhs;
  for (std::size_t k = 0; k < y.size(); ++k) s += static_cast<long double>(c.weights[k]) * y[k];
  return static_cast<double>(s);
}

double violation(const LinearConstraint& c, double r) {
  switch (c.relation) {
    case lp::Relation::Equal: return std::abs(r);
    case lp::Relation::LessEq: return std::max(0.0, r);
    case lp::Relation::GreaterEq: return std::max(0.0, -r);
  }
  return 0.0;
}

LpSolution finish(const MonotoneLp& lp, std::vector<double> y) {
  LpSolution out;
  const auto& knots = lp.layout.knots;
  for (std::size_t k = 0; k < y.size(); ++k) {
    y[k] = std::clamp(y[k], knots[k].lo, std::max(knots[k].lo, knots[k].hi));
    if (k > 0) y[k] = std::max(y[k], y[k - 1]);
  }
  out.h = lp.layout.to_function(y);
  out.value = lp.evaluate_objective(y);
  for (std::size_t j = 0; j < lp.constraints.size(); ++j) {
    const auto& c = lp.constraints[j];
    const double r = residual(c, y);
    out.max_residual = std::max(out.max_residual, violation(c, r));
    if (std::abs(r) <= 1e-8 * std::max(1.0, std::abs(c.rhs))) out.active_constraints.push_back(j);
  }
  out.knot_values = std::move(y);
  out.structure = is_extreme_point(lp.interval, out.h, 1e-8);
  return out;
}

void check_sizes(const MonotoneLp& lp) {
  const std::size_t n = lp.layout.size();
  if (lp.objective.size() != n) throw Error(ErrorCode::InvalidArgument, "objective length differs from knot count");
  for (const auto& c : lp.constraints) {
    if (c.weights.size() != n) throw Error(ErrorCode::InvalidArgument, "constraint length differs from knot count");
  }
}

}  // namespace

LpSolution solve(const MonotoneLp& lp) {
  check_sizes(lp);
  const auto& knots = lp.layout.knots;
  const std::size_t n = knots.size();
  std::vector<long> var(n, -1);
  std::size_t nv = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (knots[k].lo > knots[k].hi + 1e-12) throw Error(ErrorCode::Infeasible, "empty box at a knot");
    if (knots[k].hi > knots[k].lo) var[k] = static_cast<long>(nv++);
  }
  const double sgn = lp.sense == Sense::Max ? 1.0 : -1.0;

  lp::Problem p;
  p.objective.assign(nv, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (var[k] >= 0) p.objective[static_cast<std::size_t>(var[k])] = sgn * lp.objective[k];
  }
  auto row = [&]() { return lp::Row{std::vector<double>(nv, 0.0), lp::Relation::LessEq, 0.0}; };
  for (std::size_t k = 0; k < n; ++k) {
    if (var[k] < 0) continue;
    auto r = row();
    r.coef[static_cast<std::size_t>(var[k])] = 1.0;
    r.rhs = knots[k].hi - knots[k].lo;
    p.rows.push_back(std::move(r));
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const long a = var[k], b = var[k + 1];
    const double la = knots[k].lo, lb = knots[k + 1].lo;
    if (a >= 0 && b >= 0) {
      auto r = row();
      r.coef[static_cast<std::size_t>(a)] = 1.0;
      r.coef[static_cast<std::size_t>(b)] = -1.0;
      r.rhs = lb - la;
      p.rows.push_back(std::move(r));
    } else if (a >= 0) {
      auto r = row();
      r.coef[static_cast<std::size_t>(a)] = 1.0;
      r.rhs = lb - la;
      p.rows.push_back(std::move(r));
    } else if (b >= 0) {
      if (la - lb > 0.0) {
        auto r = row();
        r.coef[static_cast<std::size_t>(b)] = 1.0;
        r.rel = lp::Relation::GreaterEq;
        r.rhs = la - lb;
        p.rows.push_back(std::move(r));
      }
    } else if (la > lb + 1e-12) {
      throw Error(ErrorCode::Infeasible, "fixed knots violate monotonicity");
    }
  }
  for (const auto& c : lp.constraints) {
    auto r = row();
    r.rel = c.relation;
    long double shift = 0.0L;
    for (std::size_t k = 0; k < n; ++k) {
      shift += static_cast<long double>(c.weights[k]) * knots[k].lo;
      if (var[k] >= 0) r.coef[static_cast<std::size_t>(var[k])] = c.weights[k];
    }
    r.rhs = c.rhs - static_cast<double>(shift);
    p.rows.push_back(std::move(r));
  }

  const auto res = lp::solve(p);
  if (res.status == lp::Status::Infeasible) throw Error(ErrorCode::Infeasible, "no function in the interval meets the constraints");
  if (res.status == lp::Status::Unbounded) throw Error(ErrorCode::Unbounded, "bounded LP reported unbounded");

  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) {
    y[k] = knots[k].lo + (var[k] >= 0 ? res.x[static_cast<std::size_t>(var[k])] : 0.0);
  }
  auto out = finish(lp, std::move(y));
  out.duality_gap = res.duality_gap;
  return out;
}

namespace {

struct Enumerator {
  const MonotoneLp& lp;
  std::size_t max_count;
  std::size_t n;
  std::size_t J;
  std::vector<double> lo, hi;
  // Blocks under construction: [start, end] inclusive; free blocks have NaN value.
  struct Block {
    std::size_t s, e;
    double value;
    bool free;
  };
  std::vector<Block> blocks;
  std::map<std::vector<long long>, std::size_t> seen;
  std::vector<std::vector<double>> found;

  void run() { dfs(0, -kInf, false, 0); }

  void dfs(std::size_t k, double prev, bool prev_pinned, std::size_t nfree) {
    if (k == n) {
      leaf(nfree);
      return;
    }
    for (std::size_t e = k; e < n; ++e) {
      if (lo[e] > hi[k] + kFeasTol) break;
      const double lv = lo[e];
      const bool lo_ok = prev_pinned ? lv > prev + kFeasTol : lv >= prev - kFeasTol;
      if (lo_ok) {
        blocks.push_back({k, e, lv, false});
        dfs(e + 1, lv, true, nfree);
        blocks.pop_back();
      }
      const double hv = hi[k];
      const bool hi_ok = prev_pinned ? hv > prev + kFeasTol : hv >= prev - kFeasTol;
      if (hi_ok && std::abs(hv - lv) > kFeasTol) {
        blocks.push_back({k, e, hv, false});
        dfs(e + 1, hv, true, nfree);
        blocks.pop_back();
      }
      if (nfree < J) {
        blocks.push_back({k, e, std::numeric_limits<double>::quiet_NaN(), true});
        dfs(e + 1, prev, false, nfree + 1);
        blocks.pop_back();
      }
    }
  }

  void leaf(std::size_t nfree) {
    std::vector<double> y(n, 0.0);
    std::vector<std::size_t> free_idx;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (blocks[b].free) {
        free_idx.push_back(b);
        continue;
      }
      for (std::size_t k = blocks[b].s; k <= blocks[b].e; ++k) y[k] = blocks[b].value;
    }
    if (nfree == 0) {
      accept(y);
      return;
    }
    const std::size_t J = lp.constraints.size();
    std::vector<std::size_t> pick(nfree);
    for (std::size_t i = 0; i < nfree; ++i) pick[i] = i;
    for (;;) {
      solve_subset(y, free_idx, pick);
      // next combination
      std::size_t i = nfree;
      while (i > 0 && pick[i - 1] == J - nfree + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < nfree; ++j) pick[j] = pick[j - 1] + 1;
    }
  }

  void solve_subset(std::vector<double> y, const std::vector<std::size_t>& free_idx,
                    const std::vector<std::size_t>& pick) {
    const std::size_t f = free_idx.size();
    std::vector<std::vector<double>> a(f, std::vector<double>(f + 1, 0.0));
    for (std::size_t r = 0; r < f; ++r) {
      const auto& c = lp.constraints[pick[r]];
      long double rhs = c.rhs;
      for (std::size_t k = 0; k < n; ++k) rhs -= static_cast<long double>(c.weights[k]) * y[k];
      for (std::size_t col = 0; col < f; ++col) {
        const auto& bl = blocks[free_idx[col]];
        double s = 0.0;
        for (std::size_t k = bl.s; k <= bl.e; ++k) s += c.weights[k];
        a[r][col] = s;
      }
      a[r][f] = static_cast<double>(rhs);
    }
    // Gaussian elimination with partial pivoting.
    for (std::size_t col = 0; col < f; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < f; ++r) {
        if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
      }
      if (std::abs(a[piv][col]) < 1e-12) return;
      std::swap(a[piv], a[col]);
      for (std::size_t r = 0; r < f; ++r) {
        if (r == col) continue;
        const double m = a[r][col] / a[col][col];
        for (std::size_t c = col; c <= f; ++c) a[r][c] -= m * a[col][c];
      }
    }
    for (std::size_t col = 0; col < f; ++col) {
      const double t = a[col][f] / a[col][col];
      const auto& bl = blocks[free_idx[col]];
      if (t < lo[bl.e] - kFeasTol || t > hi[bl.s] + kFeasTol) return;
      for (std::size_t k = bl.s; k <= bl.e; ++k) y[k] = t;
    }
    accept(y);
  }

  void accept(const std::vector<double>& y) {
    for (std::size_t k = 0; k + 1 < n; ++k) {
      if (y[k] > y[k + 1] + kFeasTol) return;
    }
    for (const auto& c : lp.constraints) {
      if (violation(c, residual(c, y)) > kFeasTol * std::max(1.0, std::abs(c.rhs))) return;
    }
    std::vector<long long> key(n);
    for (std::size_t k = 0; k < n; ++k) key[k] = std::llround(y[k] * 1e8);
    if (seen.count(key)) return;
    seen.emplace(std::move(key), found.size());
    found.push_back(y);
    if (found.size() > max_count) throw Error(ErrorCode::BudgetExceeded, "vertex budget exhausted");
  }
};

}  // namespace

std::vector<LpSolution> enumerate_vertices(const MonotoneLp& lp, std::size_t max_count) {
  check_sizes(lp);
  Enumerator en{lp, max_count, lp.layout.size(), lp.constraints.size(), {}, {}, {}, {}, {}};
  for (const auto& k : lp.layout.knots) {
    if (k.lo > k.hi + kFeasTol) return {};
    en.lo.push_back(k.lo);
    en.hi.push_back(k.hi);
  }
  en.run();
  std::vector<LpSolution> out;
  out.reserve(en.found.size());
  for (auto& y : en.found) out.push_back(finish(lp, y));
  return out;
}

}  // namespace mfi
