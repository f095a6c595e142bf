#include "mfi/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "mfi/error.hpp"
#include "mfi/lp.hpp"

namespace mfi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPointTol = 1e-9;   // slack when validating selected points
constexpr double kMergeTol = 1e-12;  // atoms closer than this are merged
constexpr std::size_t kShards = 16;
constexpr int kAtomizeCells = 32;       // uniform refinement before atomizing

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::InvalidArgument, "tau must lie in (0,1)");
}

// Piece of the prior's level space (u0, u1] handed to one posterior.
struct LevelPiece {
  double u0;
  double u1;
  double density;
};
using LevelMeasure = std::vector<LevelPiece>;

double measure_mass(const LevelMeasure& mu) {
  long double s = 0.0L;
  for (const auto& p : mu) s += static_cast<long double>(p.density) * (p.u1 - p.u0);
  return static_cast<double>(s);
}

double measure_cum(const LevelMeasure& mu, double u) {
  long double s = 0.0L;
  for (const auto& p : mu) {
    if (u > p.u0) s += static_cast<long double>(p.density) * (std::min(u, p.u1) - p.u0);
  }
  return static_cast<double>(s);
}

void add_piece(LevelMeasure& mu, double u0, double u1, double density) {
  if (u1 > u0 && density > 0.0) mu.push_back({u0, u1, density});
}

// x with prior(x) = level strictly inside an increasing linear cell.
std::optional<double> level_inverse(const PiecewiseCdf& f, double level) {
  if (f.kind() != Kind::PiecewiseLinear) return std::nullopt;
  const auto& g = f.grid();
  const auto& v = f.values();
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    const double a = v[i], b = f.left_limit(i + 1);
    if (a < level && level < b) return g[i] + (level - a) / (b - a) * (g[i + 1] - g[i]);
  }
  return std::nullopt;
}

// Posterior CDF of the states whose prior levels are distributed as mu.
PiecewiseCdf pushforward(const PiecewiseCdf& prior, const LevelMeasure& mu, const std::vector<double>& extra = {},
                         std::optional<std::pair<double, double>> pin = std::nullopt) {
  const double mass = measure_mass(mu);
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "posterior with no mass");
  std::vector<double> pts(extra);
  for (const auto& p : mu) {
    for (double u : {p.u0, p.u1}) {
      if (auto x = level_inverse(prior, u)) pts.push_back(*x);
    }
  }
  auto grid = merge_grids({&prior}, pts);
  if (pin) {
    // Points a rounding error away from the pinned one would leave a flat of
    // width 1e-16 at the pinned level.
    const double x = pin->first;
    std::erase_if(grid, [&](double g) { return g != x && std::abs(g - x) <= 1e-12 * std::max(1.0, std::abs(x)); });
  }
  std::vector<double> values(grid.size()), ll(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = std::clamp(measure_cum(mu, prior(grid[i])) / mass, 0.0, 1.0);
    ll[i] = std::clamp(measure_cum(mu, prior(grid[i], Side::Left)) / mass, 0.0, 1.0);
  }
  values.back() = std::max(values.back(), ll.back());
  if (pin) {
    const auto it = std::lower_bound(grid.begin(), grid.end(), pin->first);
    if (it != grid.end() && *it == pin->first) {
      const std::size_t k = static_cast<std::size_t>(it - grid.begin());
      values[k] = pin->second;
      ll[k] = std::min(ll[k], pin->second);
      if (prior.kind() == Kind::PiecewiseLinear) ll[k] = pin->second;
      for (std::size_t i = k + 1; i < grid.size(); ++i) {
        ll[i] = std::max(ll[i], pin->second);
        values[i] = std::max(values[i], pin->second);
      }
      for (std::size_t i = 0; i < k; ++i) {
        ll[i] = std::min(ll[i], pin->second);
        values[i] = std::min(values[i], pin->second);
      }
    }
  }
  return simplify(PiecewiseCdf(grid, std::move(values), prior.kind(), std::move(ll)));
}

std::pair<double, double> support(const PiecewiseCdf& g) {
  const auto& x = g.grid();
  const auto& v = g.values();
  const bool linear = g.kind() == Kind::PiecewiseLinear;
  double lo = kInf, hi = kInf;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (linear && i > 0 && g.left_limit(i) > 0.0) {
      lo = x[i - 1];
      break;
    }
    if (v[i] > 0.0) {
      lo = x[i];
      break;
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (v[i] >= 1.0 - kMergeTol || (linear && g.left_limit(i) >= 1.0 - kMergeTol)) {
      hi = x[i];
      break;
    }
  }
  return {lo, hi};
}

struct Posterior {
  LevelMeasure mu;
  double point;
};

double prior_at(const PiecewiseCdf& prior, double x, Side side) {
  if (x == -kInf) return 0.0;
  if (x == kInf) return 1.0;
  return prior(x, side);
}

// Signal for a step extreme point of I(F_R, F_L): left-tail atoms, an optional
// middle slice and right-tail atoms, with the remaining levels pooled.
ConstructionPlan build_extreme(const MonotoneInterval& iv, const PiecewiseCdf& h, const PiecewiseCdf& prior,
                               double tau, double tol, std::vector<Posterior>& out) {
  const auto verdict = is_extreme_point(iv, h, tol);
  if (!verdict.is_extreme) throw Error(ErrorCode::ResolutionTooCoarse, "component is not an extreme point");
  const auto& segs = verdict.flat_segments;
  const std::size_t n = segs.size();
  std::vector<bool> is_a(n), is_b(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto t = segs[j].touch;
    is_a[j] = segs[j].level < 1.0 - tol && (t == Touch::UpperAtLeft || t == Touch::Both);
    is_b[j] = segs[j].level > tol && (t == Touch::LowerAtRightLimit || t == Touch::Both);
  }
  std::size_t ia = n, ib = n;
  for (std::size_t j = 0; j < n; ++j) {
    if (is_a[j]) ia = j;
    if (is_b[j] && ib == n) ib = j;
  }
  if (ia == n || ib == n || ib < ia || ib > ia + 1) {
    throw Error(ErrorCode::ResolutionTooCoarse, "flat segments do not split into left and right blocks");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if ((j <= ia && !is_a[j] && !(j == ib && is_b[j])) || (j >= ib && !is_b[j] && !(j == ia && is_a[j]))) {
      throw Error(ErrorCode::ResolutionTooCoarse, "flat segments do not split into left and right blocks");
    }
  }

  ConstructionPlan plan;
  plan.target = h;
  plan.x_low = segs[ia].x_lo;
  plan.x_high = segs[ib].x_hi;
  const double f_low = prior_at(prior, plan.x_low, Side::Right);
  const double f_high = prior_at(prior, plan.x_high, Side::Left);
  const double h_a = f_low / tau;
  const double h_b = (f_high - tau) / (1.0 - tau);

  struct Atom {
    double point, own0, own1, weight;
  };
  std::vector<Atom> left, right;
  for (std::size_t j = 1; j <= ia; ++j) {
    const double u0 = prior_at(prior, segs[j - 1].x_lo, Side::Right);
    const double u1 = prior_at(prior, segs[j].x_lo, Side::Right);
    left.push_back({segs[j].x_lo, u0, u1, (u1 - u0) / tau});
  }
  for (std::size_t j = ib + 1; j < n; ++j) {
    const double u0 = prior_at(prior, segs[j - 1].x_hi, Side::Left);
    const double u1 = prior_at(prior, segs[j].x_hi, Side::Left);
    right.push_back({segs[j].x_lo, u0, u1, (u1 - u0) / (1.0 - tau)});
  }

  double eta = 0.0, c = f_low;
  if (ib == ia + 1) {
    plan.x_hat = segs[ib].x_lo;
    eta = std::max(0.0, h_b - h_a);
    c = std::min(prior(*plan.x_hat) - tau * eta, f_high - eta);
    c = std::clamp(c, f_low, std::max(f_low, f_high - eta));
  }
  plan.eta = eta;

  LevelMeasure remainder;
  add_piece(remainder, f_low, c, 1.0);
  add_piece(remainder, c + eta, f_high, 1.0);
  long double left_total = 0.0L, right_total = 0.0L;
  for (const auto& a : left) left_total += a.weight;
  for (const auto& a : right) right_total += a.weight;
  const double t_total = static_cast<double>((1.0L - tau) * left_total + tau * right_total);
  plan.alpha = t_total > 0.0 ? static_cast<double>((1.0L - tau) * left_total) / t_total : 0.0;

  auto with_share = [&](double own0, double own1, double share) {
    LevelMeasure mu;
    add_piece(mu, own0, own1, 1.0);
    if (t_total > 0.0) {
      for (const auto& p : remainder) add_piece(mu, p.u0, p.u1, share / t_total);
    }
    return mu;
  };

  LevelMeasure left_union, right_union, complement;
  for (const auto& a : left) {
    out.push_back({with_share(a.own0, a.own1, (1.0 - tau) * a.weight), a.point});
    plan.pooled_left.push_back({out.size() - 1, a.point, measure_mass(out.back().mu)});
    left_union.insert(left_union.end(), out.back().mu.begin(), out.back().mu.end());
  }
  if (eta > 0.0) {
    LevelMeasure slice;
    add_piece(slice, c, c + eta, 1.0);
    out.push_back({slice, *plan.x_hat});
    plan.F_hat = pushforward(prior, slice);
    const auto [lo, hi] = support(*plan.F_hat);
    plan.y_low = lo;
    plan.y_high = hi;
  }
  for (const auto& a : right) {
    out.push_back({with_share(a.own0, a.own1, tau * a.weight), a.point});
    plan.pooled_right.push_back({out.size() - 1, a.point, measure_mass(out.back().mu)});
    right_union.insert(right_union.end(), out.back().mu.begin(), out.back().mu.end());
  }
  complement = left_union;
  complement.insert(complement.end(), right_union.begin(), right_union.end());
  if (!left_union.empty()) plan.left_aggregate = pushforward(prior, left_union);
  if (!right_union.empty()) plan.right_aggregate = pushforward(prior, right_union);
  if (!complement.empty() && measure_mass(complement) > 0.0) plan.F_tilde = pushforward(prior, complement);
  return plan;
}

SelectionRule collapse_rule(const FiniteSignal& signal, double tau, std::vector<double> points) {
  bool lower = true, upper = true;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& g = signal.components[i].second;
    lower = lower && std::abs(quantile(g, tau, QuantileSide::Lower) - points[i]) <= kMergeTol;
    upper = upper && std::abs(quantile(g, tau, QuantileSide::Upper) - points[i]) <= kMergeTol;
  }
  if (lower) return {SelectionMode::AlwaysLower, {}};
  if (upper) return {SelectionMode::AlwaysUpper, {}};
  return {SelectionMode::PerComponent, std::move(points)};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Gap to the target up to a horizontal shift of kShift (Levy form), so atoms
// placed 1e-12 apart by different arithmetic paths do not count as a
// full-mass gap. Step targets are compared everywhere; piecewise-linear
// targets by right values at their grid points, since a finite signal has a
// step quantile distribution.
constexpr double kShift = 1e-9;

double target_gap(const PiecewiseCdf& q, const PiecewiseCdf& target) {
  std::vector<double> ys = target.grid();
  if (target.kind() == Kind::Step) ys.insert(ys.end(), q.grid().begin(), q.grid().end());
  const bool step = target.kind() == Kind::Step;
  double gap = 0.0;
  auto levy = [&](double y) {
    for (const Side side : {Side::Right, Side::Left}) {
      if (!step && side == Side::Left) continue;
      gap = std::max(gap, q(y - kShift, side) - target(y, side));
      gap = std::max(gap, target(y - kShift, side) - q(y, side));
    }
  };
  for (double y : ys) {
    levy(y);
    levy(y + kShift);
  }
  return gap;
}

// sup |ECDF - G| where sorted holds the sample.
double ecdf_gap(const std::vector<double>& sorted, const PiecewiseCdf& g) {
  const double n = static_cast<double>(sorted.size());
  auto check = [&](double x, double& gap) {
    const double right = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) / n;
    const double left = static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) / n;
    gap = std::max({gap, std::abs(right - g(x)), std::abs(left - g(x, Side::Left))});
  };
  double gap = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i] == sorted[i - 1]) continue;
    check(sorted[i], gap);
  }
  for (double x : g.grid()) check(x, gap);
  return gap;
}

}  // namespace

std::vector<double> selected_quantiles(const FiniteSignal& signal, double tau, const SelectionRule& rule) {
  check_tau(tau);
  const std::size_t n = signal.components.size();
  if (rule.mode == SelectionMode::PerComponent && rule.points.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "selection rule needs one point per component");
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = signal.components[i].second;
    const double lo = quantile(g, tau, QuantileSide::Lower);
    const double hi = quantile(g, tau, QuantileSide::Upper);
    switch (rule.mode) {
      case SelectionMode::AlwaysLower: out[i] = lo; break;
      case SelectionMode::AlwaysUpper: out[i] = hi; break;
      case SelectionMode::PerComponent: {
        const double p = rule.points[i];
        const double slack = kPointTol * std::max(1.0, std::abs(p));
        if (!(p >= lo - slack && p <= hi + slack)) {
          throw Error(ErrorCode::InvalidArgument,
                      "selected point " + std::to_string(p) + " is not a quantile of component " + std::to_string(i));
        }
        out[i] = p;
        break;
      }
    }
  }
  return out;
}

PiecewiseCdf quantile_distribution(const FiniteSignal& signal, double tau, const SelectionRule& rule) {
  const auto points = selected_quantiles(signal, tau, rule);
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "signal has no components");
  std::vector<std::pair<double, double>> atoms;
  long double total = 0.0L;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = signal.components[i].first;
    if (w < 0.0) throw Error(ErrorCode::InvalidArgument, "negative component weight");
    if (!std::isfinite(points[i])) throw Error(ErrorCode::InvalidArgument, "component has an infinite quantile");
    atoms.emplace_back(points[i], w);
    total += w;
  }
  if (!(total > 0.0L)) throw Error(ErrorCode::InvalidArgument, "signal has no mass");
  std::sort(atoms.begin(), atoms.end());
  std::vector<double> grid, values;
  long double cum = 0.0L;
  for (const auto& [x, w] : atoms) {
    cum += w;
    const double v = static_cast<double>(cum / total);
    if (!grid.empty() && x - grid.back() <= kMergeTol) {
      values.back() = v;
    } else {
      grid.push_back(x);
      values.push_back(v);
    }
  }
  values.back() = 1.0;
  return PiecewiseCdf(std::move(grid), std::move(values), Kind::Step);
}

bool feasible(const PiecewiseCdf& h, const PiecewiseCdf& prior, double tau, double tol) {
  return contains(quantile_interval(prior, tau), h, tol);
}

SignalConstruction construct_signal(const PiecewiseCdf& h, const PiecewiseCdf& prior, double tau, double tol) {
  check_tau(tau);
  const auto iv = quantile_interval(prior, tau);
  if (!contains(iv, h, tol)) throw Error(ErrorCode::InfeasibleTarget, "target lies outside I(F_R, F_L)");
  const PiecewiseCdf stepped = h.kind() == Kind::Step ? h : atomize(iv, h);
  const std::size_t budget = merge_grids({&*iv.lower, &*iv.upper, &stepped}).size() + 3;
  const Mixture parts = decompose_as_mixture(iv, stepped, budget, tol);

  SignalConstruction out;
  out.signal.prior = prior;
  std::vector<double> points;
  for (const auto& [lambda, extreme] : parts) {
    if (!(lambda > 0.0)) continue;
    std::vector<Posterior> posts;
    auto plan = build_extreme(iv, extreme, prior, tau, tol, posts);
    plan.weight = lambda;
    const std::size_t offset = out.signal.components.size();
    for (auto& p : plan.pooled_left) p.component += offset, p.weight *= lambda;
    for (auto& p : plan.pooled_right) p.component += offset, p.weight *= lambda;
    for (const auto& p : posts) {
      out.signal.components.emplace_back(lambda * measure_mass(p.mu), pushforward(prior, p.mu));
      points.push_back(p.point);
    }
    out.plans.push_back(std::move(plan));
  }
  out.rule = collapse_rule(out.signal, tau, std::move(points));
  return out;
}

UniqueSignalConstruction construct_signal_unique(const PiecewiseCdf& h, const PiecewiseCdf& prior, double tau,
                                                 double epsilon, double tol) {
  check_tau(tau);
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (epsilon >= std::max(tau, 1.0 - tau)) {
    throw Error(ErrorCode::EmptyInterval, "epsilon >= max(tau, 1 - tau) leaves no distributions");
  }
  if (!is_continuous_strictly_increasing(prior)) {
    throw Error(ErrorCode::FullSupportRequired, "prior must be continuous and strictly increasing on its support");
  }
  const auto iv = quantile_interval(prior, tau, epsilon);
  if (!contains(iv, h, tol)) throw Error(ErrorCode::InfeasibleTarget, "target lies outside the epsilon interval");
  // Atoms must not move mass across F^{-1}(tau): refine on a grid that
  // contains it before replacing the linear pieces by steps.
  PiecewiseCdf fine = h;
  if (h.kind() == Kind::PiecewiseLinear) {
    std::vector<double> extra{quantile(prior, tau, QuantileSide::Lower)};
    const double a = h.grid().front(), b = h.grid().back();
    for (int i = 1; i < kAtomizeCells; ++i) extra.push_back(a + (b - a) * i / kAtomizeCells);
    fine = refine(h, merge_grids({&h, &prior}, extra));
  }
  const PiecewiseCdf stepped = atomize(iv, fine);

  std::vector<double> pts, w;
  for (std::size_t i = 0; i < stepped.size(); ++i) {
    const double jump = stepped.values()[i] - stepped.left_limit(i);
    if (jump > 1e-15) {
      pts.push_back(stepped.grid()[i]);
      w.push_back(jump);
    }
  }
  const std::size_t k_atoms = pts.size();
  long double wsum = 0.0L;
  for (double x : w) wsum += x;
  for (double& x : w) x = static_cast<double>(x / wsum);

  // Level cells between consecutive atoms.
  std::vector<double> bounds{0.0};
  for (double p : pts) bounds.push_back(prior(p));
  bounds.push_back(1.0);
  for (std::size_t c = 0; c + 1 < bounds.size(); ++c) {
    if (!(bounds[c + 1] > bounds[c])) {
      throw Error(ErrorCode::InfeasibleTarget, "atom at the edge of the prior's support");
    }
  }
  const std::size_t cells = k_atoms + 1;
  const std::size_t nvar = k_atoms * cells + 1;
  auto var = [&](std::size_t k, std::size_t c) { return k * cells + c; };
  lp::Problem prob;
  prob.objective.assign(nvar, 0.0);
  prob.objective.back() = 1.0;
  for (std::size_t c = 0; c < cells; ++c) {
    lp::Row r{std::vector<double>(nvar, 0.0), lp::Relation::Equal, bounds[c + 1] - bounds[c]};
    for (std::size_t k = 0; k < k_atoms; ++k) r.coef[var(k, c)] = 1.0;
    prob.rows.push_back(std::move(r));
  }
  for (std::size_t k = 0; k < k_atoms; ++k) {
    lp::Row below{std::vector<double>(nvar, 0.0), lp::Relation::Equal, tau * w[k]};
    lp::Row above{std::vector<double>(nvar, 0.0), lp::Relation::Equal, (1.0 - tau) * w[k]};
    for (std::size_t c = 0; c < cells; ++c) (c <= k ? below : above).coef[var(k, c)] = 1.0;
    prob.rows.push_back(std::move(below));
    prob.rows.push_back(std::move(above));
    for (std::size_t c : {k, k + 1}) {
      lp::Row side{std::vector<double>(nvar, 0.0), lp::Relation::GreaterEq, 0.0};
      side.coef[var(k, c)] = 1.0;
      side.coef.back() = -(bounds[c + 1] - bounds[c]);
      prob.rows.push_back(std::move(side));
    }
  }
  lp::Row cap{std::vector<double>(nvar, 0.0), lp::Relation::LessEq, 1.0};
  cap.coef.back() = 1.0;
  prob.rows.push_back(std::move(cap));
  const auto res = lp::solve(prob);
  if (res.status != lp::Status::Optimal) {
    throw Error(ErrorCode::InfeasibleTarget, "no level allocation reproduces the target");
  }

  UniqueSignalConstruction out;
  out.signal.prior = prior;
  out.report.epsilon = epsilon;
  out.report.min_side_density = std::max(0.0, res.x.back());
  std::vector<double> cell_total(cells, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t k = 0; k < k_atoms; ++k) cell_total[c] += std::max(0.0, res.x[var(k, c)]);
  }
  std::vector<double> points;
  for (std::size_t k = 0; k < k_atoms; ++k) {
    LevelMeasure mu;
    for (std::size_t c = 0; c < cells; ++c) {
      const double m = std::max(0.0, res.x[var(k, c)]);
      if (cell_total[c] > 0.0) add_piece(mu, bounds[c], bounds[c + 1], m / cell_total[c]);
    }
    if (!(measure_mass(mu) > 0.0)) continue;
    out.signal.components.emplace_back(measure_mass(mu),
                                       pushforward(prior, mu, {pts[k]}, std::make_pair(pts[k], tau)));
    points.push_back(pts[k]);
  }
  bool all_unique = true;
  for (const auto& [weight, g] : out.signal.components) {
    UniquenessEntry e;
    e.lower = quantile(g, tau, QuantileSide::Lower);
    e.upper = quantile(g, tau, QuantileSide::Upper);
    e.unique = e.lower == e.upper;
    all_unique = all_unique && e.unique;
    out.report.components.push_back(e);
  }
  out.report.all_unique = all_unique;
  const double m = quantile(prior, tau, QuantileSide::Lower);
  const bool mass_below = stepped(m, Side::Left) > tol;
  const bool full_at = stepped(m) >= 1.0 - tol;
  out.report.corner_obstruction = mass_below == full_at;
  out.rule = collapse_rule(out.signal, tau, std::move(points));
  return out;
}

double VerificationReport::quantile_gap() const {
  if (quantile_gap_rule) return *quantile_gap_rule;
  return std::min(quantile_gap_lower, quantile_gap_upper);
}

VerificationReport verify_signal(const FiniteSignal& signal, const PiecewiseCdf& prior, double tau,
                                 const PiecewiseCdf& target, std::size_t mc_draws, std::uint64_t seed,
                                 const std::optional<SelectionRule>& rule, unsigned threads) {
  check_tau(tau);
  VerificationReport rep;
  long double wsum = 0.0L;
  bool nonneg = true;
  for (const auto& [w, g] : signal.components) {
    wsum += w;
    nonneg = nonneg && w >= 0.0;
  }
  rep.weight_sum = static_cast<double>(wsum);
  rep.weights_valid = nonneg && std::abs(rep.weight_sum - 1.0) <= 1e-12;

  std::vector<const PiecewiseCdf*> fs{&prior};
  for (const auto& c : signal.components) fs.push_back(&c.second);
  for (double x : merge_grids(fs)) {
    for (Side s : {Side::Right, Side::Left}) {
      long double m = 0.0L;
      for (const auto& [w, g] : signal.components) m += static_cast<long double>(w) * g(x, s);
      rep.bayes_gap = std::max(rep.bayes_gap, std::abs(static_cast<double>(m) - prior(x, s)));
    }
  }

  auto gap_for = [&](const SelectionRule& r) {
    try {
      return target_gap(quantile_distribution(signal, tau, r), target);
    } catch (const Error&) {
      return kInf;
    }
  };
  rep.quantile_gap_lower = gap_for({SelectionMode::AlwaysLower, {}});
  rep.quantile_gap_upper = gap_for({SelectionMode::AlwaysUpper, {}});
  if (rule) rep.quantile_gap_rule = gap_for(*rule);

  if (mc_draws == 0 || signal.components.empty()) return rep;
  const SelectionRule used = rule.value_or(SelectionRule{SelectionMode::AlwaysLower, {}});
  std::vector<double> points;
  PiecewiseCdf exact;
  try {
    points = selected_quantiles(signal, tau, used);
    exact = quantile_distribution(signal, tau, used);
  } catch (const Error&) {
    return rep;
  }
  std::vector<double> cum;
  long double acc = 0.0L;
  for (const auto& c : signal.components) {
    acc += std::max(0.0, c.first);
    cum.push_back(static_cast<double>(acc));
  }
  const double total = cum.back();

  std::vector<std::vector<double>> q_shards(kShards), x_shards(kShards);
  auto run_shard = [&](std::size_t s) {
    const std::size_t count = mc_draws / kShards + (s < mc_draws % kShards ? 1 : 0);
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(s + 1)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto& qs = q_shards[s];
    auto& xs = x_shards[s];
    qs.reserve(count);
    xs.reserve(count);
    for (std::size_t d = 0; d < count; ++d) {
      const double r = unit(rng) * total;
      std::size_t i = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), r) - cum.begin());
      i = std::min(i, cum.size() - 1);
      qs.push_back(points[i]);
      double u = unit(rng);
      while (u <= 0.0) u = unit(rng);
      xs.push_back(quantile(signal.components[i].second, u, QuantileSide::Lower, 0.0));
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, kShards));
  if (workers == 1) {
    for (std::size_t s = 0; s < kShards; ++s) run_shard(s);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t s = t; s < kShards; s += workers) run_shard(s);
      });
    }
    for (auto& th : pool) th.join();
  }
  std::vector<double> qs, xs;
  for (std::size_t s = 0; s < kShards; ++s) {
    qs.insert(qs.end(), q_shards[s].begin(), q_shards[s].end());
    xs.insert(xs.end(), x_shards[s].begin(), x_shards[s].end());
  }
  std::sort(qs.begin(), qs.end());
  std::sort(xs.begin(), xs.end());

  MonteCarloCheck mc;
  mc.draws = mc_draws;
  mc.seed = seed;
  mc.dkw_epsilon = std::sqrt(std::log(2.0 / 0.05) / (2.0 * static_cast<double>(mc_draws)));
  mc.quantile_gap = ecdf_gap(qs, exact);
  mc.state_gap = ecdf_gap(xs, prior);
  mc.quantile_within_band = mc.quantile_gap <= mc.dkw_epsilon;
  mc.state_within_band = mc.state_gap <= mc.dkw_epsilon;
  rep.monte_carlo = mc;
  return rep;
}

std::pair<double, double> iterated_quantile_range(const PiecewiseCdf& prior, double tau, double q) {
  check_tau(tau);
  check_tau(q);
  const auto b = truncation_bounds(prior, q);
  return {quantile(b.upper, tau, QuantileSide::Lower), quantile(b.lower, tau, QuantileSide::Upper)};
}

}  // namespace mfi
