#include "mfi/persuasion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfi/error.hpp"

namespace mfi {

namespace {

constexpr double kShapeTol = 1e-12;
constexpr std::size_t kScan = 256;

PiecewiseCdf constant(double c, double at) { return PiecewiseCdf({at}, {c}, Kind::PiecewiseLinear, std::vector<double>{c}); }

// below(x) for x < a, above(x) for x >= a.
PiecewiseCdf splice(const PiecewiseCdf& below, const PiecewiseCdf& above, double a) {
  std::vector<double> grid, values, ll;
  for (double x : below.grid()) {
    if (x >= a) break;
    grid.push_back(x);
    values.push_back(below(x));
    ll.push_back(below(x, Side::Left));
  }
  grid.push_back(a);
  values.push_back(above(a));
  ll.push_back(below(a, Side::Left));
  for (double x : above.grid()) {
    if (x <= a) continue;
    grid.push_back(x);
    values.push_back(above(x));
    ll.push_back(above(x, Side::Left));
  }
  const Kind kind = below.kind() == Kind::Step && above.kind() == Kind::Step ? Kind::Step : Kind::PiecewiseLinear;
  return simplify(PiecewiseCdf(std::move(grid), std::move(values), kind, std::move(ll)));
}

// inf{x : F(x) >= level}, with the support ends at levels 0 and 1.
double level_point(const PiecewiseCdf& f, double level) {
  if (level <= kQuantileTol) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f.values()[i] > 0.0 || (i + 1 < f.size() && f.left_limit(i + 1) > 0.0)) return f.grid()[i];
    }
    return f.grid().back();
  }
  if (level >= 1.0 - kQuantileTol) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f.values()[i] >= 1.0) return f.grid()[i];
    }
    return f.grid().back();
  }
  return quantile(f, level, QuantileSide::Lower);
}

void require_full_support(const PiecewiseCdf& prior) {
  if (!is_continuous_strictly_increasing(prior)) {
    throw Error(ErrorCode::FullSupportRequired, "closed forms need a continuous prior with full support");
  }
}

double argmax_on_grid(const Integrand& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.values.size(); ++i) {
    if (v.values[i] > v.values[best]) best = i;
  }
  return v.grid[best];
}

}  // namespace

void validate_shape(const SenderPayoff& payoff) {
  const auto& vals = payoff.v.values;
  if (payoff.v.analytic) {
    if (payoff.shape == ShapeHint::QuasiConcave && !payoff.peak) {
      throw Error(ErrorCode::ShapeHintInvalid, "analytic quasi-concave payoff needs a peak");
    }
    return;
  }
  if (vals.empty() || payoff.v.grid.size() != vals.size()) {
    throw Error(ErrorCode::InvalidArgument, "payoff grid and values differ");
  }
  if (!std::is_sorted(payoff.v.grid.begin(), payoff.v.grid.end())) {
    throw Error(ErrorCode::InvalidArgument, "payoff grid must be increasing");
  }
  const std::size_t n = vals.size();
  if (payoff.shape == ShapeHint::QuasiConcave) {
    std::size_t top = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (vals[i] > vals[top]) top = i;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const bool ok = i < top ? vals[i] <= vals[i + 1] + kShapeTol : vals[i + 1] <= vals[i] + kShapeTol;
      if (!ok) throw Error(ErrorCode::ShapeHintInvalid, "payoff is not unimodal");
    }
    if (payoff.peak && payoff.v(*payoff.peak) < vals[top] - 1e-9) {
      throw Error(ErrorCode::ShapeHintInvalid, "declared peak is not a maximizer");
    }
  } else if (payoff.shape == ShapeHint::StrictlyQuasiConvex) {
    std::size_t bottom = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (vals[i] < vals[bottom]) bottom = i;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const bool ok = i < bottom ? vals[i] > vals[i + 1] : vals[i + 1] > vals[i];
      if (!ok) throw Error(ErrorCode::ShapeHintInvalid, "payoff is not strictly quasi-convex");
    }
  }
}

PiecewiseCdf left_pooled(const PiecewiseCdf& prior, double tau, double a) {
  const auto b = truncation_bounds(prior, tau);
  return splice(constant(0.0, a), b.upper, a);
}

PiecewiseCdf right_pooled(const PiecewiseCdf& prior, double tau, double a) {
  const auto b = truncation_bounds(prior, tau);
  return splice(b.lower, constant(1.0, a), a);
}

PiecewiseCdf central_pooled(const PiecewiseCdf& prior, double tau, double eta) {
  const auto b = truncation_bounds(prior, tau);
  const double lo = level_point(prior, tau * eta);
  const double hi = level_point(prior, tau + (1.0 - tau) * eta);
  return splice(splice(b.upper, constant(eta, lo), lo), b.lower, hi);
}

ClosedFormCandidate closed_form_candidate(const PiecewiseCdf& prior, double tau, const SenderPayoff& payoff) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::InvalidArgument, "tau must lie in (0,1)");
  if (payoff.shape == ShapeHint::General) throw Error(ErrorCode::ShapeHintInvalid, "no closed form for a general payoff");
  require_full_support(prior);
  validate_shape(payoff);

  ClosedFormCandidate out;
  if (payoff.shape == ShapeHint::QuasiConcave) {
    out.a = payoff.peak ? *payoff.peak : argmax_on_grid(payoff.v);
    const double m = quantile(prior, tau, QuantileSide::Lower);
    out.kind = out.a <= m ? CandidateKind::LeftPooled : CandidateKind::RightPooled;
    out.h = out.a <= m ? left_pooled(prior, tau, out.a) : right_pooled(prior, tau, out.a);
    out.value = stieltjes(payoff.v, out.h);
    return out;
  }

  // Central candidate: scan eta, then golden-section search around the best.
  out.kind = CandidateKind::Central;
  auto value = [&](double eta) { return stieltjes(payoff.v, central_pooled(prior, tau, eta)); };
  std::size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= kScan; ++i) {
    const double val = value(static_cast<double>(i) / kScan);
    if (val > best_val) best_val = val, best = i;
  }
  double lo = static_cast<double>(best == 0 ? 0 : best - 1) / kScan;
  double hi = static_cast<double>(std::min(best + 1, kScan)) / kScan;
  double eta = static_cast<double>(best) / kScan;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = value(x1), f2 = value(x2);
  while (hi - lo > 1e-11) {
    if (f1 < f2) {
      lo = x1, x1 = x2, f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = value(x2);
    } else {
      hi = x2, x2 = x1, f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = value(x1);
    }
  }
  for (double cand : {x1, x2}) {
    const double val = value(cand);
    if (val > best_val) best_val = val, eta = cand;
  }
  out.eta = eta;
  out.a_low = level_point(prior, tau * eta);
  out.a_high = level_point(prior, tau + (1.0 - tau) * eta);
  out.h = central_pooled(prior, tau, eta);
  out.value = stieltjes(payoff.v, out.h);
  return out;
}

PersuasionResult solve_persuasion(const PiecewiseCdf& prior, double tau, const SenderPayoff& payoff, double tol) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::InvalidArgument, "tau must lie in (0,1)");
  validate_shape(payoff);
  PersuasionResult out;
  std::vector<double> extra = payoff.v.grid;
  if (payoff.shape != ShapeHint::General && is_continuous_strictly_increasing(prior)) {
    out.closed_form = closed_form_candidate(prior, tau, payoff);
    const auto& c = *out.closed_form;
    if (c.kind == CandidateKind::Central) {
      extra.push_back(c.a_low);
      extra.push_back(c.a_high);
    } else {
      extra.push_back(c.a);
    }
  }
  const auto iv = quantile_interval(prior, tau);
  MonotoneLp lp(iv, prior.kind(), extra);
  lp.objective = lp.stieltjes_weights(payoff.v);
  lp.sense = Sense::Max;
  const auto sol = solve(lp);
  out.h = sol.h;
  out.value = stieltjes(payoff.v, sol.h);
  out.structure = sol.structure;
  out.duality_gap = sol.duality_gap;
  if (out.closed_form) {
    out.concordance_gap = std::abs(out.value - out.closed_form->value);
    out.concordant = out.concordance_gap <= tol;
  }
  return out;
}

const char* to_string(CandidateKind kind) {
  switch (kind) {
    case CandidateKind::LeftPooled: return "left_pooled";
    case CandidateKind::RightPooled: return "right_pooled";
    case CandidateKind::Central: return "central";
  }
  return "unknown";
}

const char* to_string(ShapeHint hint) {
  switch (hint) {
    case ShapeHint::QuasiConcave: return "quasi_concave";
    case ShapeHint::StrictlyQuasiConvex: return "strictly_quasi_convex";
    case ShapeHint::General: return "general";
  }
  return "unknown";
}

}  // namespace mfi
