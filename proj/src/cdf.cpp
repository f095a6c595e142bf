#include "mfi/cdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfi/error.hpp"

namespace mfi {

namespace {

constexpr double kRepairTol = 1e-12;

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, msg);
}

// Left limit implied by the kind when no explicit value is stored.
double implied_left_limit(const std::vector<double>& values, Kind kind, std::size_t i) {
  if (i == 0) return 0.0;
  return kind == Kind::Step ? values[i - 1] : values[i];
}

}  // namespace

PiecewiseCdf::PiecewiseCdf(std::vector<double> grid, std::vector<double> values, Kind kind,
                           std::optional<std::vector<double>> left_limits)
    : grid_(std::move(grid)), values_(std::move(values)), kind_(kind), left_limits_(std::move(left_limits)) {
  require(!grid_.empty(), "empty grid");
  require(grid_.size() == values_.size(), "grid and values differ in length");
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    require(std::isfinite(grid_[i]) && std::isfinite(values_[i]), "non-finite grid point or value");
    if (i > 0) require(grid_[i] > grid_[i - 1], "grid must be strictly increasing");
  }
  if (left_limits_) {
    auto& ll = *left_limits_;
    require(ll.size() == grid_.size(), "left_limits length differs from grid");
    for (double v : ll) require(std::isfinite(v), "non-finite left limit");
  }

  // Walk the chain tail <= v_0 <= ll_1 <= v_1 ... and absorb rounding noise.
  auto fix = [](double prev, double& cur, const char* what) {
    if (cur < prev) {
      require(prev - cur <= kRepairTol * std::max(1.0, std::abs(prev)),
              std::string("function decreases at ") + what);
      cur = prev;
    }
  };
  double prev = left_limits_ ? (*left_limits_)[0] : 0.0;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (left_limits_ && i > 0) {
      double& ll = (*left_limits_)[i];
      if (kind_ == Kind::Step) {
        require(std::abs(ll - values_[i - 1]) <= kRepairTol * std::max(1.0, std::abs(ll)),
                "step left limit must equal the previous value");
        ll = values_[i - 1];
      } else {
        fix(prev, ll, "a left limit");
      }
      prev = ll;
    }
    fix(prev, values_[i], "a breakpoint");
    prev = values_[i];
  }
}

PiecewiseCdf PiecewiseCdf::dirac(double x) { return PiecewiseCdf({x}, {1.0}, Kind::Step); }

PiecewiseCdf PiecewiseCdf::uniform(double a, double b) {
  require(b > a, "uniform needs a < b");
  return PiecewiseCdf({a, b}, {0.0, 1.0}, Kind::PiecewiseLinear);
}

double PiecewiseCdf::left_limit(std::size_t i) const {
  if (left_limits_) return (*left_limits_)[i];
  return implied_left_limit(values_, kind_, i);
}

double PiecewiseCdf::operator()(double x, Side side) const {
  if (x < grid_.front() || (x == grid_.front() && side == Side::Left)) return tail();
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
  const auto i = static_cast<std::size_t>(it - grid_.begin()) - 1;
  if (x == grid_[i]) return side == Side::Right ? values_[i] : left_limit(i);
  if (i + 1 == grid_.size() || kind_ == Kind::Step) return values_[i];
  const double t = (x - grid_[i]) / (grid_[i + 1] - grid_[i]);
  return values_[i] + t * (left_limit(i + 1) - values_[i]);
}

double evaluate(const PiecewiseCdf& f, double x, Side side) { return f(x, side); }

double quantile(const PiecewiseCdf& g, double tau, QuantileSide side, double tol) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::InvalidArgument, "tau must lie in (0,1)");
  const auto& x = g.grid();
  const auto& v = g.values();
  const bool linear = g.kind() == Kind::PiecewiseLinear;
  const double inf = std::numeric_limits<double>::infinity();

  if (side == QuantileSide::Lower) {
    if (g.tail() >= tau - tol) return -inf;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i > 0 && linear) {
        const double ll = g.left_limit(i);
        if (ll >= tau - tol) {
          if (ll <= tau + tol) return x[i];
          const double a = v[i - 1];
          return x[i - 1] + (tau - a) / (ll - a) * (x[i] - x[i - 1]);
        }
      }
      if (v[i] >= tau - tol) return x[i];
    }
    throw Error(ErrorCode::InvalidArgument, "function never reaches tau");
  }

  if (g.tail() > tau + tol) return -inf;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i > 0 && linear) {
      const double ll = g.left_limit(i);
      if (ll > tau + tol) {
        const double a = v[i - 1];
        if (a >= tau - tol) return x[i - 1];
        return x[i - 1] + (tau - a) / (ll - a) * (x[i] - x[i - 1]);
      }
    }
    if (v[i] > tau + tol) return x[i];
  }
  return inf;
}

std::vector<double> merge_grids(const std::vector<const PiecewiseCdf*>& fs, const std::vector<double>& extra) {
  std::vector<double> out(extra.begin(), extra.end());
  for (const auto* f : fs) out.insert(out.end(), f->grid().begin(), f->grid().end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PiecewiseCdf canonical(const PiecewiseCdf& f) {
  if (!f.left_limits()) return f;
  const auto& ll = *f.left_limits();
  for (std::size_t i = 0; i < ll.size(); ++i) {
    if (ll[i] != implied_left_limit(f.values(), f.kind(), i)) return f;
  }
  return PiecewiseCdf(f.grid(), f.values(), f.kind());
}

PiecewiseCdf refine(const PiecewiseCdf& f, const std::vector<double>& grid) {
  std::vector<double> values(grid.size()), ll(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = f(grid[i], Side::Right);
    ll[i] = f(grid[i], Side::Left);
  }
  return canonical(PiecewiseCdf(grid, std::move(values), f.kind(), std::move(ll)));
}

PiecewiseCdf mix(const Mixture& components) {
  require(!components.empty(), "empty mixture");
  long double total = 0.0L;
  bool all_step = true;
  std::vector<const PiecewiseCdf*> fs;
  for (const auto& [w, g] : components) {
    require(std::isfinite(w), "non-finite mixture weight");
    require(w >= 0.0, "negative mixture weight");
    total += w;
    all_step = all_step && g.kind() == Kind::Step;
    fs.push_back(&g);
  }
  require(std::abs(static_cast<double>(total) - 1.0) <= 1e-12, "mixture weights do not sum to 1");
  const auto grid = merge_grids(fs);
  std::vector<double> values(grid.size(), 0.0), ll(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    long double sv = 0.0L, sl = 0.0L;
    for (const auto& [w, g] : components) {
      sv += static_cast<long double>(w) * g(grid[i], Side::Right);
      sl += static_cast<long double>(w) * g(grid[i], Side::Left);
    }
    values[i] = static_cast<double>(sv);
    ll[i] = static_cast<double>(sl);
  }
  const Kind kind = all_step ? Kind::Step : Kind::PiecewiseLinear;
  if (kind == Kind::Step) {
    for (std::size_t i = 1; i < grid.size(); ++i) ll[i] = values[i - 1];
  }
  return canonical(PiecewiseCdf(grid, std::move(values), kind, std::move(ll)));
}

namespace {

template <typename Fn>
void for_each_point(const PiecewiseCdf& a, const PiecewiseCdf& b, Fn&& fn) {
  fn(a.tail(), b.tail());
  for (double x : merge_grids({&a, &b})) {
    fn(a(x, Side::Left), b(x, Side::Left));
    fn(a(x, Side::Right), b(x, Side::Right));
  }
}

}  // namespace

bool fosd_leq(const PiecewiseCdf& a, const PiecewiseCdf& b, double tol) {
  bool ok = true;
  for_each_point(a, b, [&](double va, double vb) { ok = ok && va <= vb + tol; });
  return ok;
}

double sup_distance(const PiecewiseCdf& a, const PiecewiseCdf& b) {
  double gap = 0.0;
  for_each_point(a, b, [&](double va, double vb) { gap = std::max(gap, std::abs(va - vb)); });
  return gap;
}

bool is_cdf(const PiecewiseCdf& f, double tol) {
  return std::abs(f.tail()) <= tol && std::abs(f.final_value() - 1.0) <= tol;
}

TruncationBounds truncation_bounds(const PiecewiseCdf& f, double tau, double epsilon) {
  require(tau > 0.0 && tau < 1.0, "tau must lie in (0,1)");
  require(epsilon >= 0.0, "epsilon must be nonnegative");
  if (epsilon >= std::max(tau, 1.0 - tau)) {
    throw Error(ErrorCode::EmptyInterval, "epsilon >= max(tau, 1 - tau)");
  }
  const auto& g = f.grid();
  std::vector<double> grid = g;
  double split = std::numeric_limits<double>::quiet_NaN();

  if (epsilon == 0.0) {
    // min(F/tau, 1) and max((F-tau)/(1-tau), 0) kink where F crosses tau.
    if (f.kind() == Kind::PiecewiseLinear) {
      for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double a = f.values()[i], b = f.left_limit(i + 1);
        if (a < tau && tau < b) {
          split = g[i] + (tau - a) / (b - a) * (g[i + 1] - g[i]);
          if (split > g[i] && split < g[i + 1]) grid.insert(grid.begin() + static_cast<long>(i) + 1, split);
          else split = std::numeric_limits<double>::quiet_NaN();
          break;
        }
      }
    }
    std::vector<double> up(grid.size()), upl(grid.size()), lo(grid.size()), lol(grid.size());
    auto upper = [&](double v) { return std::min(v / tau, 1.0); };
    auto lower = [&](double v) { return std::max((v - tau) / (1.0 - tau), 0.0); };
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double v = f(grid[i], Side::Right), l = f(grid[i], Side::Left);
      if (grid[i] == split) v = l = tau;
      up[i] = upper(v);
      upl[i] = upper(l);
      lo[i] = lower(v);
      lol[i] = lower(l);
    }
    return {canonical(PiecewiseCdf(grid, lo, f.kind(), lol)), canonical(PiecewiseCdf(grid, up, f.kind(), upl))};
  }

  const double m = quantile(f, tau, QuantileSide::Lower);
  if (!std::binary_search(grid.begin(), grid.end(), m)) {
    grid.insert(std::upper_bound(grid.begin(), grid.end(), m), m);
  }
  std::vector<double> up(grid.size()), upl(grid.size()), lo(grid.size()), lol(grid.size());
  const double a = tau + epsilon, b = tau - epsilon;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = f(grid[i], Side::Right), l = f(grid[i], Side::Left);
    if (grid[i] < m) {
      up[i] = v / a;
      lo[i] = 0.0;
    } else {
      up[i] = 1.0;
      lo[i] = (v - b) / (1.0 - b);
    }
    if (grid[i] <= m) {
      upl[i] = l / a;
      lol[i] = 0.0;
    } else {
      upl[i] = 1.0;
      lol[i] = (l - b) / (1.0 - b);
    }
  }
  return {canonical(PiecewiseCdf(grid, lo, f.kind(), lol)), canonical(PiecewiseCdf(grid, up, f.kind(), upl))};
}

PiecewiseCdf affine(const PiecewiseCdf& f, double a, double b) {
  require(a > 0.0, "affine map must be increasing");
  std::vector<double> values(f.size()), ll(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    values[i] = a * f.values()[i] + b;
    ll[i] = a * f.left_limit(i) + b;
  }
  return canonical(PiecewiseCdf(f.grid(), std::move(values), f.kind(), std::move(ll)));
}

PiecewiseCdf simplify(const PiecewiseCdf& f) {
  const std::size_t n = f.size();
  if (n <= 1) return f;
  const auto& v = f.values();
  const bool linear = f.kind() == Kind::PiecewiseLinear;
  std::vector<bool> keep(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    const double ll = f.left_limit(i);
    if (ll != v[i]) continue;
    if (!linear) {
      keep[i] = false;
      continue;
    }
    // A linear breakpoint is dropped only inside a flat stretch.
    const double before = i == 0 ? f.tail() : v[i - 1];
    const double after = i + 1 == n ? v[i] : f.left_limit(i + 1);
    keep[i] = !(before == v[i] && after == v[i]);
  }
  std::vector<double> g, val, lls;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    g.push_back(f.grid()[i]);
    val.push_back(v[i]);
    lls.push_back(f.left_limit(i));
  }
  if (g.empty()) {
    // Constant function: keep one point carrying the constant.
    return canonical(PiecewiseCdf({f.grid()[0]}, {v[0]}, f.kind(), std::vector<double>{f.tail()}));
  }
  return canonical(PiecewiseCdf(std::move(g), std::move(val), f.kind(), std::move(lls)));
}

bool is_continuous_strictly_increasing(const PiecewiseCdf& f, double tol) {
  if (f.kind() != Kind::PiecewiseLinear || f.size() < 2) return false;
  if (std::abs(f.tail()) > tol || std::abs(f.values()[0]) > tol) return false;
  if (std::abs(f.final_value() - 1.0) > tol) return false;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (std::abs(f.left_limit(i) - f.values()[i]) > tol) return false;
    if (!(f.values()[i] > f.values()[i - 1])) return false;
  }
  return true;
}

}  // namespace mfi
