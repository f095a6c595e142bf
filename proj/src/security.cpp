#include "mfi/security.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfi/error.hpp"
#include "mfi/monotone_lp.hpp"

namespace mfi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kProbTol = 1e-9;

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, msg);
}

void check_states(const std::vector<double>& states) {
  require(!states.empty(), "profit grid is empty");
  for (std::size_t i = 0; i < states.size(); ++i) {
    require(states[i] >= 0.0 && states[i] <= 1.0, "profits must lie in [0,1]");
    require(i == 0 || states[i] > states[i - 1], "profit grid must be strictly increasing");
  }
}

void check_distribution(const std::vector<double>& p, std::size_t n, bool positive, const char* what) {
  require(p.size() == n, std::string(what) + " has the wrong length");
  long double s = 0.0L;
  for (double x : p) {
    require(positive ? x > 0.0 : x >= 0.0, std::string(what) + (positive ? " must be positive" : " must be nonnegative"));
    s += x;
  }
  require(std::abs(static_cast<double>(s) - 1.0) <= kProbTol, std::string(what) + " must sum to 1");
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

std::vector<double> payments_of(const std::vector<double>& knots) { return {knots.begin() + 1, knots.end()}; }

std::vector<double> scaled(const std::vector<double>& w, double c) {
  std::vector<double> out(w);
  for (double& x : out) x *= c;
  return out;
}

std::vector<double> diff(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

struct EffortLp {
  MonotoneLp lp;
  std::vector<std::size_t> ic_rows;  // constraint index per other effort (finite mode)
  std::vector<std::size_t> ic_effort;
  std::size_t ir_row = 0;
};

EffortLp build_effort_lp(const MoralHazardModel& m, std::size_t e, const std::vector<std::vector<double>>& slope) {
  EffortLp out{MonotoneLp(security_interval(m.states), Kind::Step), {}, {}, 0};
  auto& lp = out.lp;
  const auto& phi = m.densities[e];
  const auto w = lp.point_weights(m.states, phi);
  lp.objective = scaled(w, -1.0);
  lp.objective_constant = dot(phi, m.states) - m.cost[e];
  lp.sense = Sense::Max;
  if (m.mode == EffortMode::FiniteEfforts) {
    for (std::size_t o = 0; o < m.efforts.size(); ++o) {
      if (o == e) continue;
      const auto d = diff(phi, m.densities[o]);
      LinearConstraint c;
      c.weights = lp.point_weights(m.states, d);
      c.relation = lp::Relation::LessEq;
      c.rhs = dot(d, m.states) - m.cost[e] + m.cost[o];
      c.label = "incentive:" + std::to_string(o);
      out.ic_rows.push_back(lp.constraints.size());
      out.ic_effort.push_back(o);
      lp.constraints.push_back(std::move(c));
    }
  } else {
    LinearConstraint c;
    c.weights = lp.point_weights(m.states, slope[e]);
    c.relation = lp::Relation::Equal;
    c.rhs = dot(slope[e], m.states) - m.cost_slope[e];
    c.label = "first_order";
    out.ic_rows.push_back(lp.constraints.size());
    lp.constraints.push_back(std::move(c));
  }
  LinearConstraint ir;
  ir.weights = w;
  ir.relation = lp::Relation::GreaterEq;
  ir.rhs = (1.0 + m.risk_free) * m.investment;
  ir.label = "participation";
  out.ir_row = lp.constraints.size();
  lp.constraints.push_back(std::move(ir));
  return out;
}

std::vector<std::vector<double>> effort_slopes(const MoralHazardModel& m) {
  std::vector<std::vector<double>> out;
  if (m.mode != EffortMode::FirstOrder) return out;
  const std::size_t k = m.efforts.size();
  for (std::size_t e = 0; e < k; ++e) {
    const std::size_t a = e == 0 ? 0 : e - 1, b = e + 1 == k ? e : e + 1;
    out.push_back(scaled(diff(m.densities[b], m.densities[a]), 1.0 / (m.efforts[b] - m.efforts[a])));
  }
  return out;
}

}  // namespace

std::size_t ContingentDebt::non_defaultable_count() const {
  return static_cast<std::size_t>(
      std::count_if(segments.begin(), segments.end(), [](const DebtSegment& s) { return s.non_defaultable; }));
}

bool ContingentDebt::is_standard_debt() const {
  // Paying the whole return is min{x, d} with d at or above the top state.
  if (segments.empty()) return true;
  if (segments.size() != 1 || segments[0].x_hi != kInf) return false;
  return std::all_of(residual_diagonal.begin(), residual_diagonal.end(),
                     [&](const auto& d) { return d.second <= segments[0].x_lo; });
}

MonotoneInterval security_interval(const std::vector<double>& states) {
  check_states(states);
  std::vector<double> zeros(states.size(), 0.0);
  return MonotoneInterval(PiecewiseCdf(states, zeros, Kind::Step),
                          PiecewiseCdf(states, states, Kind::PiecewiseLinear));
}

ContingentDebt extract_contingent_debt(const PiecewiseCdf& h, double tol) {
  struct Piece {
    double lo, hi;
    bool flat;
    double level;
    std::size_t cells;
  };
  const auto& g = h.grid();
  const auto& v = h.values();
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (double y : {v[i], h.left_limit(i)}) {
      if (y < -tol || y > g[i] + tol) {
        throw Error(ErrorCode::NotContingentDebt, "security leaves [0, x] at x = " + std::to_string(g[i]));
      }
    }
  }
  const bool step = h.kind() == Kind::Step;
  std::vector<Piece> pieces;
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = i + 1 < n ? g[i + 1] : kInf;
    if (step) {
      pieces.push_back({g[i], hi, true, v[i], 1});
    } else if (i + 1 == n) {
      if (std::abs(v[i] - g[i]) <= tol) {
        pieces.push_back({g[i], g[i], false, v[i], 1});
      } else {
        pieces.push_back({g[i], kInf, true, v[i], 1});
      }
    } else {
      const double a = v[i], b = h.left_limit(i + 1);
      if (std::abs(a - g[i]) <= tol && std::abs(b - g[i + 1]) <= tol) {
        pieces.push_back({g[i], hi, false, a, 1});
      } else if (std::abs(b - a) <= tol) {
        pieces.push_back({g[i], hi, true, a, 1});
      } else {
        throw Error(ErrorCode::NotContingentDebt, "security is neither flat nor on the diagonal on [" +
                                                      std::to_string(g[i]) + ", " + std::to_string(hi) + ")");
      }
    }
  }
  std::vector<Piece> merged;
  for (const auto& p : pieces) {
    if (!merged.empty()) {
      auto& q = merged.back();
      const bool touching = q.hi == p.lo;
      if (touching && q.flat && p.flat && std::abs(q.level - p.level) <= tol) {
        q.hi = p.hi;
        q.cells += p.cells;
        continue;
      }
      if (touching && !q.flat && !p.flat) {
        q.hi = p.hi;
        continue;
      }
    }
    merged.push_back(p);
  }
  // Nothing paid from the bottom up: the flat starts at zero profit.
  if (!merged.empty() && merged.front().flat && std::abs(merged.front().level) <= tol) {
    merged.front().lo = std::min(merged.front().lo, 0.0);
  }
  ContingentDebt out;
  for (const auto& p : merged) {
    const bool diagonal = !p.flat || (step && p.cells == 1 && std::abs(p.level - p.lo) <= tol);
    if (diagonal) {
      const double hi = p.flat ? p.lo : p.hi;
      if (!out.residual_diagonal.empty() && out.residual_diagonal.back().second >= p.lo - tol && !p.flat) {
        out.residual_diagonal.back().second = hi;
      } else {
        out.residual_diagonal.emplace_back(p.lo, hi);
      }
      continue;
    }
    out.segments.push_back({p.lo, p.hi, p.level, p.level < p.lo - tol});
  }
  return out;
}

void MoralHazardModel::validate() const {
  check_states(states);
  require(!efforts.empty(), "no effort levels");
  require(densities.size() == efforts.size(), "one density per effort is required");
  require(cost.size() == efforts.size(), "one cost per effort is required");
  for (const auto& d : densities) check_distribution(d, states.size(), true, "profit distribution");
  require(investment >= 0.0, "investment must be nonnegative");
  require(risk_free >= 0.0, "risk-free rate must be nonnegative");
  if (mode == EffortMode::FirstOrder) {
    require(efforts.size() >= 2, "first-order mode needs an effort grid");
    require(cost_slope.size() == efforts.size(), "one marginal cost per effort is required");
    for (std::size_t e = 1; e < efforts.size(); ++e) require(efforts[e] > efforts[e - 1], "effort grid must increase");
  }
}

PeakCount count_peaks(const std::vector<double>& ratio, double plateau_tol) {
  PeakCount out;
  std::size_t runs = 0;
  bool rising = false;
  for (std::size_t i = 1; i < ratio.size(); ++i) {
    const bool up = ratio[i] - ratio[i - 1] > plateau_tol;
    if (up && !rising) ++runs;
    rising = up;
  }
  out.peaks = std::max<std::size_t>(runs, 1);
  out.degenerate = runs == 0;
  return out;
}

MoralHazardResult solve_moral_hazard(const MoralHazardModel& m) {
  m.validate();
  const auto slope = effort_slopes(m);
  std::optional<MoralHazardResult> best;
  std::optional<EffortLp> best_lp;
  std::vector<std::size_t> infeasible;
  for (std::size_t e = 0; e < m.efforts.size(); ++e) {
    auto elp = build_effort_lp(m, e, slope);
    LpSolution sol;
    try {
      sol = solve(elp.lp);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::Infeasible) throw;
      infeasible.push_back(e);
      continue;
    }
    if (best && !(sol.value > best->value + 1e-12)) continue;
    MoralHazardResult r;
    r.effort_index = e;
    r.effort = m.efforts[e];
    r.value = sol.value;
    r.security = sol.h;
    r.payments = payments_of(sol.knot_values);
    best = std::move(r);
    best_lp = std::move(elp);
  }
  if (!best) throw Error(ErrorCode::Infeasible, "no effort level can be funded");
  auto& r = *best;
  auto& elp = *best_lp;
  r.infeasible_efforts = std::move(infeasible);

  // Among optimal securities prefer the one with the most incentive slack.
  if (m.mode == EffortMode::FiniteEfforts && !elp.ic_rows.empty()) {
    MonotoneLp tie = elp.lp;
    LinearConstraint keep;
    keep.weights = elp.lp.objective;
    keep.relation = lp::Relation::GreaterEq;
    keep.rhs = r.value - elp.lp.objective_constant - 1e-10 * std::max(1.0, std::abs(r.value));
    keep.label = "optimal_value";
    std::vector<double> obj(tie.size(), 0.0);
    for (std::size_t row : elp.ic_rows) {
      for (std::size_t k = 0; k < obj.size(); ++k) obj[k] -= elp.lp.constraints[row].weights[k];
    }
    tie.constraints.push_back(std::move(keep));
    tie.objective = obj;
    tie.objective_constant = 0.0;
    try {
      const auto sol = solve(tie);
      r.security = sol.h;
      r.payments = payments_of(sol.knot_values);
      r.value = elp.lp.evaluate_objective(sol.knot_values);
    } catch (const Error&) {
      // Keep the primary solution.
    }
  }

  const auto y = elp.lp.layout.from_function(r.security);
  const auto& phi = m.densities[r.effort_index];
  r.ir_slack = dot(elp.lp.constraints[elp.ir_row].weights, y) - elp.lp.constraints[elp.ir_row].rhs;
  for (std::size_t j = 0; j < elp.lp.constraints.size(); ++j) {
    const auto& c = elp.lp.constraints[j];
    if (std::abs(dot(c.weights, y) - c.rhs) <= 1e-8 * std::max(1.0, std::abs(c.rhs))) r.active_constraints.push_back(j);
  }
  if (m.mode == EffortMode::FiniteEfforts) {
    std::size_t binding = elp.ic_effort.empty() ? r.effort_index : elp.ic_effort[0];
    double least = kInf;
    for (std::size_t j = 0; j < elp.ic_rows.size(); ++j) {
      const auto& c = elp.lp.constraints[elp.ic_rows[j]];
      const double slack = c.rhs - dot(c.weights, y);
      r.ic_slack.push_back(slack);
      if (slack < least) least = slack, binding = elp.ic_effort[j];
    }
    if (binding != r.effort_index) {
      for (std::size_t i = 0; i < phi.size(); ++i) {
        r.likelihood_ratio.push_back((phi[i] - m.densities[binding][i]) / phi[i]);
      }
    }
  } else {
    const auto& c = elp.lp.constraints[elp.ic_rows[0]];
    r.foc_residual = std::abs(dot(c.weights, y) - c.rhs);
    for (std::size_t i = 0; i < phi.size(); ++i) r.likelihood_ratio.push_back(slope[r.effort_index][i] / phi[i]);
    // Funding level must sit strictly inside the range the incentive
    // constraint leaves open.
    MonotoneLp range = elp.lp;
    range.constraints.erase(range.constraints.begin() + static_cast<long>(elp.ir_row));
    range.objective = elp.lp.constraints[elp.ir_row].weights;
    range.objective_constant = 0.0;
    const double need = (1.0 + m.risk_free) * m.investment;
    range.sense = Sense::Max;
    const double hi = solve(range).value;
    range.sense = Sense::Min;
    const double lo = solve(range).value;
    r.interior = lo < need && need < hi;
  }
  if (!r.likelihood_ratio.empty()) r.peaks = count_peaks(r.likelihood_ratio);
  r.debt = extract_contingent_debt(r.security);
  return r;
}

void AdverseSelectionModel::validate() const {
  check_states(states);
  require(!conditionals.empty(), "no signals");
  require(signal_weights.size() == conditionals.size(), "one weight per signal is required");
  check_distribution(signal_weights, conditionals.size(), false, "signal weights");
  for (const auto& c : conditionals) check_distribution(c, states.size(), false, "conditional distribution");
  require(worst_signal < conditionals.size(), "worst signal index out of range");
  require(discount > 0.0 && discount < 1.0, "discount must lie in (0,1)");
  const auto& w = conditionals[worst_signal];
  for (const auto& c : conditionals) {
    long double a = 0.0L, b = 0.0L;
    for (std::size_t i = 0; i < states.size(); ++i) {
      a += c[i];
      b += w[i];
      require(a <= b + kProbTol, "worst signal must be dominated by every other signal");
    }
  }
}

double issuer_objective(const AdverseSelectionModel& m, const std::vector<double>& y, double z_low) {
  const double k = m.discount / (1.0 - m.discount);
  long double s = 0.0L;
  for (std::size_t j = 0; j < m.conditionals.size(); ++j) {
    const double mean = dot(m.conditionals[j], y);
    if (!(mean > 0.0)) return -kInf;
    s += m.signal_weights[j] * std::pow(mean, -k);
  }
  return (1.0 - m.discount) * std::pow(z_low, 1.0 / (1.0 - m.discount)) * static_cast<double>(s);
}

namespace {

// Moves each constant block within tol of zero, its first state or the block
// below onto that value.
std::vector<double> snap_blocks(const std::vector<double>& states, std::vector<double> y, double tol) {
  std::size_t i = 0;
  while (i < y.size()) {
    std::size_t j = i + 1;
    while (j < y.size() && std::abs(y[j] - y[i]) <= 1e-12) ++j;
    double level = y[i];
    if (std::abs(level) <= tol) {
      level = 0.0;
    } else if (std::abs(level - states[i]) <= tol) {
      level = states[i];
    } else if (i > 0 && std::abs(level - y[i - 1]) <= tol) {
      level = y[i - 1];
    }
    std::fill(y.begin() + static_cast<long>(i), y.begin() + static_cast<long>(j), level);
    i = j;
  }
  return y;
}

}  // namespace

std::optional<AdverseSelectionResult> solve_adverse_selection_at(const AdverseSelectionModel& m, double z_low,
                                                                 std::size_t max_vertices) {
  MonotoneLp lp(security_interval(m.states), Kind::Step);
  LinearConstraint c;
  c.weights = lp.point_weights(m.states, m.conditionals[m.worst_signal]);
  c.relation = lp::Relation::Equal;
  c.rhs = z_low;
  c.label = "worst_signal_value";
  lp.constraints.push_back(std::move(c));
  const auto vertices = enumerate_vertices(lp, max_vertices);
  std::optional<AdverseSelectionResult> best;
  for (const auto& v : vertices) {
    const auto y = payments_of(v.knot_values);
    const double val = issuer_objective(m, y, z_low);
    if (best && !(val > best->value)) continue;
    AdverseSelectionResult r;
    r.security = v.h;
    r.payments = y;
    r.z_low = z_low;
    r.value = val;
    best = std::move(r);
  }
  if (best) best->vertices_checked = vertices.size();
  return best;
}

AdverseSelectionResult solve_adverse_selection(const AdverseSelectionModel& m, std::size_t z_grid,
                                               std::size_t max_vertices) {
  m.validate();
  require(z_grid >= 2, "z grid needs at least two points");
  const double top = dot(m.conditionals[m.worst_signal], m.states);
  require(top > 0.0, "worst signal has no cash flow");
  auto eval = [&](double z) -> double {
    const auto r = solve_adverse_selection_at(m, z, max_vertices);
    return r ? r->value : -kInf;
  };
  std::vector<double> zs(z_grid), vals(z_grid);
  std::size_t arg = 0;
  for (std::size_t j = 0; j < z_grid; ++j) {
    zs[j] = top * static_cast<double>(j + 1) / static_cast<double>(z_grid);
    vals[j] = eval(zs[j]);
    if (vals[j] > vals[arg]) arg = j;
  }
  if (!(vals[arg] > -kInf)) throw Error(ErrorCode::Infeasible, "no z_low admits a security");
  double lo = arg == 0 ? top * 1e-9 : zs[arg - 1];
  double hi = arg + 1 == z_grid ? top : zs[arg + 1];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = eval(x1), f2 = eval(x2);
  while (hi - lo > 1e-8) {
    if (f1 < f2) {
      lo = x1, x1 = x2, f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = eval(x2);
    } else {
      hi = x2, x2 = x1, f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = eval(x1);
    }
  }
  double z_best = zs[arg], v_best = vals[arg];
  for (const auto& [z, f] : {std::pair{x1, f1}, std::pair{x2, f2}}) {
    if (f > v_best) z_best = z, v_best = f;
  }
  auto out = *solve_adverse_selection_at(m, z_best, max_vertices);
  // The optimum often sits on a kink where the free block reaches a bound,
  // which the search above only approaches. Try the snapped security's z.
  const auto snapped = snap_blocks(m.states, out.payments, 1e-6);
  const double z_snap = dot(m.conditionals[m.worst_signal], snapped);
  if (z_snap > 0.0 && z_snap <= top && z_snap != z_best) {
    const auto alt = solve_adverse_selection_at(m, z_snap, max_vertices);
    if (alt && alt->value >= out.value - 1e-12 * std::max(1.0, std::abs(out.value))) out = *alt;
  }
  out.debt = extract_contingent_debt(out.security);
  return out;
}

}  // namespace mfi
