#include "mfi/interval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mfi/error.hpp"
#include "mfi/monotone_lp.hpp"

namespace mfi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPinTol = 1e-12;

std::vector<const PiecewiseCdf*> members(const MonotoneInterval& iv, const PiecewiseCdf* h) {
  std::vector<const PiecewiseCdf*> fs;
  if (h) fs.push_back(h);
  if (iv.lower) fs.push_back(&*iv.lower);
  if (iv.upper) fs.push_back(&*iv.upper);
  return fs;
}

void require_bounded(const MonotoneInterval& iv) {
  if (!iv.bounded()) throw Error(ErrorCode::InvalidArgument, "operation needs both bounds");
}

}  // namespace

MonotoneInterval::MonotoneInterval(std::optional<PiecewiseCdf> lo, std::optional<PiecewiseCdf> hi, double tol)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower && upper && !fosd_leq(*lower, *upper, tol)) {
    throw Error(ErrorCode::InvalidArgument, "lower bound exceeds upper bound");
  }
}

MonotoneInterval quantile_interval(const PiecewiseCdf& prior, double tau, double epsilon) {
  auto b = truncation_bounds(prior, tau, epsilon);
  return MonotoneInterval(std::move(b.lower), std::move(b.upper));
}

bool contains(const MonotoneInterval& iv, const PiecewiseCdf& h, double tol) {
  if (iv.lower && !fosd_leq(*iv.lower, h, tol)) return false;
  if (iv.upper && !fosd_leq(h, *iv.upper, tol)) return false;
  return true;
}

ExtremeVerdict is_extreme_point(const MonotoneInterval& iv, const PiecewiseCdf& h, double tol) {
  if (!contains(iv, h, tol)) throw Error(ErrorCode::NotContained, "function lies outside the interval");
  const auto grid = merge_grids(members(iv, &h));
  const std::size_t n = grid.size();

  // Cell 0 is (-inf, g_0); cell c >= 1 is [g_{c-1}, g_c) with g_n = +inf.
  std::vector<double> a(n + 1), b(n + 1), start(n + 1), end(n + 1);
  std::vector<bool> flat(n + 1);
  for (std::size_t c = 0; c <= n; ++c) {
    a[c] = c == 0 ? -kInf : grid[c - 1];
    b[c] = c == n ? kInf : grid[c];
    start[c] = c == 0 ? h.tail() : h(a[c]);
    end[c] = c == 0 ? h.tail() : (c == n ? h.final_value() : h(b[c], Side::Left));
    flat[c] = std::abs(end[c] - start[c]) <= tol;
  }

  auto lower_at = [&](double x, Side s) {
    if (x == -kInf) return iv.lower->tail();
    if (x == kInf) return iv.lower->final_value();
    return (*iv.lower)(x, s);
  };
  auto upper_at = [&](double x, Side s) {
    if (x == -kInf) return iv.upper->tail();
    if (x == kInf) return iv.upper->final_value();
    return (*iv.upper)(x, s);
  };

  ExtremeVerdict verdict;
  for (std::size_t c = 1; c < n; ++c) {
    if (flat[c]) continue;
    const bool on_lower = iv.lower && std::abs(start[c] - lower_at(a[c], Side::Right)) <= tol &&
                          std::abs(end[c] - lower_at(b[c], Side::Left)) <= tol;
    const bool on_upper = iv.upper && std::abs(start[c] - upper_at(a[c], Side::Right)) <= tol &&
                          std::abs(end[c] - upper_at(b[c], Side::Left)) <= tol;
    if (!on_lower && !on_upper) {
      verdict.violations.push_back({a[c], b[c], ViolationReason::StrictlyInteriorNotFlat});
    }
  }

  for (std::size_t c = 0; c <= n; ++c) {
    if (!flat[c]) continue;
    const std::size_t first = c;
    const double level = start[c];
    while (c + 1 <= n && flat[c + 1] && std::abs(start[c + 1] - level) <= tol) ++c;
    FlatSegment seg{a[first], b[c], level, Touch::None};
    const bool up = iv.upper && std::abs(level - upper_at(seg.x_lo, Side::Right)) <= tol;
    const bool lo = iv.lower && std::abs(level - lower_at(seg.x_hi, Side::Left)) <= tol;
    seg.touch = up && lo ? Touch::Both : up ? Touch::UpperAtLeft : lo ? Touch::LowerAtRightLimit : Touch::None;
    if (seg.touch == Touch::None) {
      verdict.violations.push_back({seg.x_lo, seg.x_hi, ViolationReason::FlatTouchesNeitherBound});
    }
    verdict.flat_segments.push_back(seg);
  }
  std::sort(verdict.violations.begin(), verdict.violations.end(),
            [](const Violation& p, const Violation& q) { return p.x_lo < q.x_lo; });
  verdict.is_extreme = verdict.violations.empty();
  return verdict;
}

PiecewiseCdf sample_extreme_point(const MonotoneInterval& iv, std::uint64_t seed) {
  require_bounded(iv);
  const auto layout = make_layout(iv, Kind::Step);
  const std::size_t n = layout.size();
  for (const auto& k : layout.knots) {
    if (k.lo > k.hi + kPinTol) throw Error(ErrorCode::ResolutionTooCoarse, "step discretization is empty");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> y(n);
  double prev = -kInf;
  std::size_t k = 0;
  while (k < n) {
    const double cap = layout.knots[k].hi;
    std::vector<std::size_t> ends;
    for (std::size_t e = k; e < n; ++e) {
      const double lo = layout.knots[e].lo;
      if (lo > cap) break;
      if (lo >= prev) ends.push_back(e);
    }
    std::size_t last = k;
    double level = cap;
    if (!ends.empty() && unit(rng) < 0.5) {
      // Block closes on the lower bound at its right end.
      last = ends[static_cast<std::size_t>(unit(rng) * static_cast<double>(ends.size())) % ends.size()];
      level = layout.knots[last].lo;
    } else {
      // Block opens on the upper bound at its left end.
      while (last + 1 < n && layout.knots[last + 1].lo <= level && unit(rng) < 0.6) ++last;
    }
    level = std::max(level, prev);
    for (std::size_t j = k; j <= last; ++j) y[j] = level;
    prev = level;
    k = last + 1;
  }
  return layout.to_function(y);
}

PiecewiseCdf atomize(const MonotoneInterval& iv, const PiecewiseCdf& h, double tol) {
  if (h.kind() == Kind::Step) return h;
  require_bounded(iv);
  const auto& L = *iv.lower;
  const auto& U = *iv.upper;
  const auto grid = merge_grids(members(iv, &h));

  std::vector<double> points, levels;
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    const double a = grid[j], b = grid[j + 1];
    const double la = L(a), lb = L(b, Side::Left);
    // First point where the left limit of L reaches `level`, within (a, b].
    auto reach = [&](double level) {
      if (lb <= level) return b;
      if (lb == la) return a;
      return std::min(b, a + (level - la) / (lb - la) * (b - a));
    };
    double y = a;
    bool first = true;
    for (int iter = 0;; ++iter) {
      if (iter > 256) throw Error(ErrorCode::ResolutionTooCoarse, "bounds pinch while H increases");
      const double cap = first ? h(a) + 0.5 * tol : U(y);
      const double next = reach(cap);
      if (!(next > y)) throw Error(ErrorCode::ResolutionTooCoarse, "bounds pinch while H increases");
      double level = first ? std::max(h(a), L(next, Side::Left))
                           : std::max(h(y), L(next, Side::Left));
      level = std::min(level, U(y));
      if (!levels.empty()) level = std::max(level, levels.back());
      points.push_back(y);
      levels.push_back(level);
      y = next;
      first = false;
      if (next >= b) break;
    }
  }
  points.push_back(grid.back());
  levels.push_back(std::max(h.final_value(), levels.empty() ? h.final_value() : levels.back()));

  std::vector<double> ll(points.size());
  ll[0] = h.tail();
  for (std::size_t i = 1; i < points.size(); ++i) ll[i] = levels[i - 1];
  auto out = canonical(PiecewiseCdf(points, levels, Kind::Step, ll));
  if (!contains(iv, out, kDefaultTol)) throw Error(ErrorCode::ResolutionTooCoarse, "atomized target left the interval");
  return out;
}

namespace {

struct Blocks {
  std::vector<std::size_t> begin;  // block b spans [begin[b], begin[b+1])
  std::vector<bool> pinned;
};

Blocks find_blocks(const KnotLayout& layout, const std::vector<double>& y) {
  Blocks out;
  const std::size_t n = y.size();
  for (std::size_t k = 0; k < n;) {
    std::size_t e = k;
    while (e + 1 < n && std::abs(y[e + 1] - y[k]) <= kPinTol) ++e;
    bool pin = false;
    for (std::size_t j = k; j <= e; ++j) {
      pin = pin || std::abs(y[j] - layout.knots[j].lo) <= kPinTol || std::abs(y[j] - layout.knots[j].hi) <= kPinTol;
    }
    out.begin.push_back(k);
    out.pinned.push_back(pin);
    k = e + 1;
  }
  out.begin.push_back(n);
  return out;
}

}  // namespace

Mixture decompose_as_mixture(const MonotoneInterval& iv, const PiecewiseCdf& h, std::size_t max_components,
                             double tol) {
  require_bounded(iv);
  if (!contains(iv, h, tol)) throw Error(ErrorCode::NotContained, "function lies outside the interval");
  if (is_extreme_point(iv, h, tol).is_extreme) return {{1.0, h}};

  // Piecewise-linear targets are split on their own grid; anything else is
  // first matched by a step function.
  const PiecewiseCdf target = h.kind() == Kind::PiecewiseLinear ? h : atomize(iv, h);
  const auto layout = make_layout(iv, target.kind(), target.grid());
  const std::size_t n = layout.size();
  std::vector<double> x = layout.from_function(target);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = std::clamp(x[k], layout.knots[k].lo, std::max(layout.knots[k].lo, layout.knots[k].hi));
    if (k > 0) x[k] = std::max(x[k], x[k - 1]);
  }

  std::vector<std::pair<double, std::vector<double>>> parts;
  double remaining = 1.0;
  for (std::size_t iter = 0; iter <= n + 1; ++iter) {
    const auto blocks = find_blocks(layout, x);
    const bool vertex = std::all_of(blocks.pinned.begin(), blocks.pinned.end(), [](bool p) { return p; });
    if (vertex) {
      parts.emplace_back(remaining, x);
      remaining = 0.0;
      break;
    }
    // Lower every free block as far as its boxes and the previous block allow.
    std::vector<double> v = x;
    for (std::size_t b = 0; b + 1 < blocks.begin.size(); ++b) {
      const std::size_t s = blocks.begin[b], e = blocks.begin[b + 1];
      if (blocks.pinned[b]) continue;
      double lo = -kInf;
      for (std::size_t j = s; j < e; ++j) lo = std::max(lo, layout.knots[j].lo);
      const double level = std::max(lo, s > 0 ? v[s - 1] : -kInf);
      for (std::size_t j = s; j < e; ++j) v[j] = level;
    }
    // Extend the ray v -> x to the boundary of the face.
    double tstar = kInf;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = x[k] - v[k];
      if (d > 0.0) tstar = std::min(tstar, (layout.knots[k].hi - v[k]) / d);
      if (k + 1 < n) {
        const double dn = x[k + 1] - v[k + 1];
        if (d > dn) tstar = std::min(tstar, (v[k + 1] - v[k]) / (d - dn));
      }
    }
    if (!std::isfinite(tstar) || tstar <= 1.0) {
      parts.emplace_back(remaining, x);
      remaining = 0.0;
      break;
    }
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) {
      w[k] = v[k] + tstar * (x[k] - v[k]);
      if (std::abs(w[k] - layout.knots[k].hi) <= kPinTol) w[k] = layout.knots[k].hi;
      if (std::abs(w[k] - layout.knots[k].lo) <= kPinTol) w[k] = layout.knots[k].lo;
      if (k > 0 && w[k] - w[k - 1] <= kPinTol) w[k] = w[k - 1];
    }
    const double lambda = 1.0 - 1.0 / tstar;
    parts.emplace_back(remaining * lambda, v);
    remaining *= 1.0 - lambda;
    x = std::move(w);
  }
  if (remaining > 0.0) throw Error(ErrorCode::ResolutionTooCoarse, "decomposition did not terminate");

  Mixture out;
  long double total = 0.0L;
  for (auto& [w, y] : parts) {
    if (w <= 1e-15) continue;
    total += w;
    out.emplace_back(w, layout.to_function(y));
  }
  for (auto& part : out) part.first = static_cast<double>(part.first / total);
  if (out.size() > max_components) {
    throw Error(ErrorCode::ResolutionTooCoarse, "decomposition needs more components than allowed");
  }
  const auto mixed = mix(out);
  for (double g : h.grid()) {
    if (std::abs(mixed(g) - h(g)) > 1e-6) throw Error(ErrorCode::ResolutionTooCoarse, "mixture misses the target");
  }
  return out;
}

const char* to_string(Touch touch) {
  switch (touch) {
    case Touch::UpperAtLeft: return "upper_at_left";
    case Touch::LowerAtRightLimit: return "lower_at_right_limit";
    case Touch::Both: return "both";
    case Touch::None: return "none";
  }
  return "none";
}

const char* to_string(ViolationReason reason) {
  return reason == ViolationReason::StrictlyInteriorNotFlat ? "strictly_interior_not_flat"
                                                            : "flat_touches_neither_bound";
}

}  // namespace mfi
