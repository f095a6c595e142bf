#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfi/cdf.hpp"
#include "mfi/interval.hpp"
#include "mfi/posterior.hpp"

namespace mfi {

/// Shares of individuals placing themselves in each bin [z_{k-1}, z_k).
struct PredictionDataset {
  std::vector<double> partition;  // 0 = z_0 < ... < z_K = 1
  std::vector<double> shares;     // theta_1..theta_K

  void validate() const;
  std::size_t bins() const { return shares.size(); }
};

/// Distribution of district medians feasible for the population F.
bool legislature_feasible(const PiecewiseCdf& h, const PiecewiseCdf& prior, double tol = kDefaultTol);

/// Policies enacted under some district map: the prior's interquartile range.
std::pair<double, double> legislation_range(const PiecewiseCdf& prior);

/// Populations consistent with an observed distribution of district medians.
MonotoneInterval identification_bounds(const PiecewiseCdf& h);

enum class Family { Lower, Upper };

struct InequalityCheck {
  std::size_t k = 0;  // 1-based bin index
  Family family = Family::Lower;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  bool borderline = false;
};

struct RationalizabilityReport {
  bool verdict = false;
  bool borderline = false;
  std::vector<InequalityCheck> checks;
  std::vector<InequalityCheck> failures;
  // Witness, present when the verdict is positive.
  std::optional<PiecewiseCdf> target;
  std::optional<UniqueSignalConstruction> witness;
  double epsilon = 0.0;
  bool midpoint_placement = true;
  std::vector<double> witness_shares;
  bool witness_verified = false;
};

RationalizabilityReport rationalizable(const PredictionDataset& data, const PiecewiseCdf& prior, double tau,
                                       bool build_witness = true);

/// Share of the selected quantiles falling in each bin.
std::vector<double> binned_shares(const FiniteSignal& signal, double tau, const SelectionRule& rule,
                                  const std::vector<double>& partition);

const char* to_string(Family family);

}  // namespace mfi
