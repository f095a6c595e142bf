#pragma once

#include <optional>
#include <string>

#include "mfi/cdf.hpp"
#include "mfi/interval.hpp"
#include "mfi/monotone_lp.hpp"

namespace mfi {

enum class ShapeHint { QuasiConcave, StrictlyQuasiConvex, General };

/// Sender payoff as a function of the receiver's action (the quantile).
struct SenderPayoff {
  Integrand v;
  ShapeHint shape = ShapeHint::General;
  std::optional<double> peak;
};

/// Validates the declared shape on the tabulation; throws ShapeHintInvalid.
void validate_shape(const SenderPayoff& payoff);

enum class CandidateKind { LeftPooled, RightPooled, Central };

struct ClosedFormCandidate {
  CandidateKind kind = CandidateKind::LeftPooled;
  PiecewiseCdf h;
  double value = 0.0;
  double a = 0.0;       // peak for the pooled candidates
  double a_low = 0.0;   // central candidate: F_L(a_low) = F_R(a_high) = eta
  double a_high = 0.0;
  double eta = 0.0;
};

/// 0 below a, F_L from a on.
PiecewiseCdf left_pooled(const PiecewiseCdf& prior, double tau, double a);
/// F_R below a, 1 from a on.
PiecewiseCdf right_pooled(const PiecewiseCdf& prior, double tau, double a);
/// F_L below a_low, eta on [a_low, a_high), F_R from a_high on.
PiecewiseCdf central_pooled(const PiecewiseCdf& prior, double tau, double eta);

ClosedFormCandidate closed_form_candidate(const PiecewiseCdf& prior, double tau, const SenderPayoff& payoff);

struct PersuasionResult {
  PiecewiseCdf h;
  double value = 0.0;
  ExtremeVerdict structure;
  double duality_gap = 0.0;
  std::optional<ClosedFormCandidate> closed_form;
  double concordance_gap = 0.0;
  bool concordant = true;
};

/// Maximizes the integral of v against H over I(F_R, F_L) and, when a shape
/// hint is given, compares with the closed-form candidate.
PersuasionResult solve_persuasion(const PiecewiseCdf& prior, double tau, const SenderPayoff& payoff,
                                  double tol = 1e-7);

const char* to_string(CandidateKind kind);
const char* to_string(ShapeHint hint);

}  // namespace mfi
