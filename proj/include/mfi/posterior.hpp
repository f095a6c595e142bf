#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mfi/cdf.hpp"
#include "mfi/interval.hpp"

namespace mfi {

/// Finite signal: posteriors with probabilities, averaging to the prior.
struct FiniteSignal {
  PiecewiseCdf prior;
  Mixture components;
};

enum class SelectionMode { AlwaysLower, AlwaysUpper, PerComponent };

struct SelectionRule {
  SelectionMode mode = SelectionMode::AlwaysLower;
  std::vector<double> points;  // one per component for PerComponent
};

/// Selected tau-quantile of every component; throws if a PerComponent point
/// lies outside its component's quantile set.
std::vector<double> selected_quantiles(const FiniteSignal& signal, double tau, const SelectionRule& rule);

/// Distribution of the selected tau-quantile (step function).
PiecewiseCdf quantile_distribution(const FiniteSignal& signal, double tau, const SelectionRule& rule);

bool feasible(const PiecewiseCdf& h, const PiecewiseCdf& prior, double tau, double tol = kDefaultTol);

struct PooledPosterior {
  std::size_t component;  // index into the signal
  double point;           // selected quantile
  double weight;
};

/// Pieces of the construction for one extreme point.
struct ConstructionPlan {
  double weight = 1.0;  // mixture weight of this extreme point
  PiecewiseCdf target;
  double eta = 0.0;
  double x_low = 0.0;   // start of the last block touching the upper bound
  double x_high = 0.0;  // end of the first block touching the lower bound
  std::optional<double> x_hat;
  std::optional<double> y_low, y_high;  // support of F_hat
  std::optional<PiecewiseCdf> F_hat;
  std::optional<PiecewiseCdf> F_tilde;
  double alpha = 0.0;
  std::vector<PooledPosterior> pooled_left, pooled_right;
  std::optional<PiecewiseCdf> left_aggregate, right_aggregate;
};

struct SignalConstruction {
  FiniteSignal signal;
  SelectionRule rule;
  std::vector<ConstructionPlan> plans;
};

/// Signal whose tau-quantile distribution is h.
SignalConstruction construct_signal(const PiecewiseCdf& h, const PiecewiseCdf& prior, double tau,
                                    double tol = kDefaultTol);

struct UniquenessEntry {
  double lower = 0.0;
  double upper = 0.0;
  bool unique = false;
};

struct UniquenessReport {
  double epsilon = 0.0;
  std::vector<UniquenessEntry> components;
  bool all_unique = false;
  /// Smallest posterior density next to the selected point, in level units.
  double min_side_density = 0.0;
  /// Target sits on the corner at F^{-1}(tau) where no unique-quantile
  /// signal exists (mass on both sides of the corner missing on one side).
  bool corner_obstruction = false;
};

struct UniqueSignalConstruction {
  FiniteSignal signal;
  SelectionRule rule;
  UniquenessReport report;
};

UniqueSignalConstruction construct_signal_unique(const PiecewiseCdf& h, const PiecewiseCdf& prior, double tau,
                                                 double epsilon, double tol = kDefaultTol);

struct MonteCarloCheck {
  std::size_t draws = 0;
  std::uint64_t seed = 0;
  double quantile_gap = 0.0;  // sup |empirical - exact| of the selected quantile
  double state_gap = 0.0;     // sup |empirical - prior| of drawn states
  double dkw_epsilon = 0.0;   // 95% band half-width
  bool quantile_within_band = false;
  bool state_within_band = false;
};

struct VerificationReport {
  double weight_sum = 0.0;
  bool weights_valid = false;
  double bayes_gap = 0.0;
  double quantile_gap_lower = 0.0;
  double quantile_gap_upper = 0.0;
  std::optional<double> quantile_gap_rule;
  std::optional<MonteCarloCheck> monte_carlo;

  /// Gap under the supplied rule, or the better one-sided rule.
  double quantile_gap() const;
};

/// Independent re-check of a signal. mc_draws = 0 skips Monte Carlo. Draws
/// are split into fixed shards so results do not depend on thread count.
VerificationReport verify_signal(const FiniteSignal& signal, const PiecewiseCdf& prior, double tau,
                                 const PiecewiseCdf& target, std::size_t mc_draws, std::uint64_t seed,
                                 const std::optional<SelectionRule>& rule = std::nullopt, unsigned threads = 1);

/// Feasible tau-quantiles of posterior q-quantiles.
std::pair<double, double> iterated_quantile_range(const PiecewiseCdf& prior, double tau, double q);

}  // namespace mfi
