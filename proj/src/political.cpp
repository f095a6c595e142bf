#include "mfi/political.hpp"

#include <algorithm>
#include <cmath>

#include "mfi/error.hpp"

namespace mfi {

namespace {

constexpr double kMargin = 1e-9;
constexpr double kShareTol = 1e-9;

// Largest epsilon whose interval contains h, by bisection.
double containment_epsilon(const PiecewiseCdf& h, const PiecewiseCdf& prior, double tau) {
  double lo = 0.0, hi = std::max(tau, 1.0 - tau);
  auto inside = [&](double eps) {
    try {
      return contains(quantile_interval(prior, tau, eps), h, 1e-12);
    } catch (const Error&) {
      return false;
    }
  };
  if (!inside(1e-12)) return 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return lo;
}

PiecewiseCdf atoms_to_cdf(const std::vector<double>& points, const std::vector<double>& weights) {
  std::vector<double> g, v;
  long double cum = 0.0L;
  for (std::size_t i = 0; i < points.size(); ++i) {
    cum += weights[i];
    g.push_back(points[i]);
    v.push_back(static_cast<double>(cum));
  }
  v.back() = 1.0;
  return PiecewiseCdf(std::move(g), std::move(v), Kind::Step);
}

}  // namespace

void PredictionDataset::validate() const {
  if (partition.size() < 2 || partition.size() != shares.size() + 1) {
    throw Error(ErrorCode::InvalidArgument, "partition needs K+1 points for K shares");
  }
  if (partition.front() != 0.0 || partition.back() != 1.0) {
    throw Error(ErrorCode::InvalidArgument, "partition must run from 0 to 1");
  }
  for (std::size_t k = 1; k < partition.size(); ++k) {
    if (!(partition[k] > partition[k - 1])) throw Error(ErrorCode::InvalidArgument, "partition must be strictly increasing");
  }
  long double s = 0.0L;
  for (double t : shares) {
    if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "shares must be nonnegative");
    s += t;
  }
  if (std::abs(static_cast<double>(s) - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "shares must sum to 1");
}

bool legislature_feasible(const PiecewiseCdf& h, const PiecewiseCdf& prior, double tol) {
  return feasible(h, prior, 0.5, tol);
}

std::pair<double, double> legislation_range(const PiecewiseCdf& prior) {
  return {quantile(prior, 0.25, QuantileSide::Lower), quantile(prior, 0.75, QuantileSide::Upper)};
}

MonotoneInterval identification_bounds(const PiecewiseCdf& h) {
  return MonotoneInterval(affine(h, 0.5, 0.0), affine(h, 0.5, 0.5));
}

std::vector<double> binned_shares(const FiniteSignal& signal, double tau, const SelectionRule& rule,
                                  const std::vector<double>& partition) {
  const auto points = selected_quantiles(signal, tau, rule);
  const std::size_t k_bins = partition.size() - 1;
  std::vector<long double> acc(k_bins, 0.0L);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto it = std::upper_bound(partition.begin(), partition.end(), points[i]);
    std::size_t k = it == partition.begin() ? 0 : static_cast<std::size_t>(it - partition.begin()) - 1;
    k = std::min(k, k_bins - 1);
    acc[k] += signal.components[i].first;
  }
  return std::vector<double>(acc.begin(), acc.end());
}

RationalizabilityReport rationalizable(const PredictionDataset& data, const PiecewiseCdf& prior, double tau,
                                       bool build_witness) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::InvalidArgument, "tau must lie in (0,1)");
  data.validate();
  if (!is_continuous_strictly_increasing(prior) || prior(0.0, Side::Left) != 0.0 ||
      prior.grid().front() > 0.0 || prior.grid().back() < 1.0 || prior(0.0) != 0.0 ||
      prior(1.0, Side::Left) != 1.0) {
    throw Error(ErrorCode::FullSupportRequired, "prior must be continuous and strictly increasing on [0,1]");
  }
  const std::size_t K = data.bins();
  const auto& z = data.partition;
  const auto& theta = data.shares;
  std::vector<double> cum(K + 1, 0.0);
  for (std::size_t k = 1; k <= K; ++k) cum[k] = cum[k - 1] + theta[k - 1];

  RationalizabilityReport rep;
  rep.verdict = true;
  for (std::size_t k = 1; k <= K; ++k) {
    for (Family fam : {Family::Lower, Family::Upper}) {
      InequalityCheck c;
      c.k = k;
      c.family = fam;
      if (fam == Family::Lower) {
        c.lhs = cum[k];
        c.rhs = prior(z[k]) / tau;
      } else {
        c.lhs = 1.0 - cum[k - 1];
        c.rhs = (1.0 - prior(z[k - 1], Side::Left)) / (1.0 - tau);
      }
      const double margin = kMargin * std::max(1.0, std::abs(c.rhs));
      c.holds = c.lhs < c.rhs - margin;
      c.borderline = std::abs(c.lhs - c.rhs) <= margin;
      rep.borderline = rep.borderline || c.borderline;
      if (!c.holds) {
        rep.verdict = false;
        rep.failures.push_back(c);
      }
      rep.checks.push_back(c);
    }
  }
  if (!rep.verdict || !build_witness) return rep;

  // Atoms at bin midpoints; when those leave no slack, at the midpoint of
  // each bin's admissible level window, which is interior whenever the
  // inequalities hold.
  std::vector<double> w;
  for (std::size_t k = 1; k <= K; ++k) {
    if (theta[k - 1] > 0.0) w.push_back(theta[k - 1]);
  }
  for (bool midpoint : {true, false}) {
    std::vector<double> pts;
    for (std::size_t k = 1; k <= K; ++k) {
      if (theta[k - 1] <= 0.0) continue;
      if (midpoint) {
        pts.push_back(0.5 * (z[k - 1] + z[k]));
      } else {
        const double lo = std::max(tau * cum[k], prior(z[k - 1]));
        const double hi = std::min(tau + (1.0 - tau) * cum[k - 1], prior(z[k]));
        pts.push_back(quantile(prior, 0.5 * (lo + hi), QuantileSide::Lower));
      }
    }
    const PiecewiseCdf h = atoms_to_cdf(pts, w);
    const double eps = containment_epsilon(h, prior, tau);
    rep.midpoint_placement = midpoint;
    rep.target = h;
    if (!(eps > 0.0)) continue;
    rep.epsilon = 0.5 * eps;
    rep.witness = construct_signal_unique(h, prior, tau, rep.epsilon);
    const auto& wit = *rep.witness;
    rep.witness_shares = binned_shares(wit.signal, tau, wit.rule, z);
    bool shares_ok = true;
    for (std::size_t k = 0; k < K; ++k) {
      shares_ok = shares_ok && std::abs(rep.witness_shares[k] - theta[k]) <= kShareTol;
    }
    const auto check = verify_signal(wit.signal, prior, tau, h, 0, 0, wit.rule);
    rep.witness_verified =
        shares_ok && wit.report.all_unique && check.bayes_gap <= 1e-9 && check.quantile_gap() <= 1e-6;
    if (rep.witness_verified) break;
  }
  return rep;
}

const char* to_string(Family family) { return family == Family::Lower ? "lower" : "upper"; }

}  // namespace mfi
