#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "mfi/cdf.hpp"
#include "mfi/interval.hpp"

namespace mfi {

struct DebtSegment {
  double x_lo = 0.0;
  double x_hi = 0.0;  // +inf when the segment runs to the top
  double face = 0.0;
  bool non_defaultable = false;
};

/// Security that is flat on disjoint segments and equals x elsewhere.
struct ContingentDebt {
  std::vector<DebtSegment> segments;
  std::vector<std::pair<double, double>> residual_diagonal;

  std::size_t face_values() const { return segments.size(); }
  std::size_t non_defaultable_count() const;
  /// min{x, d}: one face value, on the diagonal below it.
  bool is_standard_debt() const;
};

/// Step securities are read as payments at discrete profit states: a single
/// state paid in full counts as diagonal, not as a face value.
ContingentDebt extract_contingent_debt(const PiecewiseCdf& h, double tol = 1e-9);

/// Limited-liability securities on the profit grid: I(0, x).
MonotoneInterval security_interval(const std::vector<double>& states);

enum class EffortMode { FiniteEfforts, FirstOrder };

struct MoralHazardModel {
  std::vector<double> states;                  // profits in [0,1]
  std::vector<double> efforts;
  std::vector<std::vector<double>> densities;  // probability of each state, per effort
  std::vector<double> cost;
  std::vector<double> cost_slope;  // first-order mode
  double investment = 0.0;
  double risk_free = 0.0;
  EffortMode mode = EffortMode::FiniteEfforts;

  void validate() const;
};

struct PeakCount {
  std::size_t peaks = 1;
  bool degenerate = false;  // no increasing run; reported as one peak
};

PeakCount count_peaks(const std::vector<double>& ratio, double plateau_tol = 1e-12);

struct MoralHazardResult {
  PiecewiseCdf security;
  std::vector<double> payments;  // H at each state
  ContingentDebt debt;
  std::size_t effort_index = 0;
  double effort = 0.0;
  double value = 0.0;
  double ir_slack = 0.0;
  std::vector<double> ic_slack;  // finite efforts: one per other effort
  double foc_residual = 0.0;     // first-order mode
  bool interior = true;          // first-order mode: funding level interior
  std::vector<std::size_t> infeasible_efforts;
  std::vector<double> likelihood_ratio;
  PeakCount peaks;
  std::vector<std::size_t> active_constraints;
};

MoralHazardResult solve_moral_hazard(const MoralHazardModel& model);

struct AdverseSelectionModel {
  std::vector<double> states;
  std::vector<double> signal_weights;             // Psi
  std::vector<std::vector<double>> conditionals;  // probability of each state, per signal
  std::size_t worst_signal = 0;
  double discount = 0.5;  // delta

  void validate() const;
};

struct AdverseSelectionResult {
  PiecewiseCdf security;
  std::vector<double> payments;
  ContingentDebt debt;
  double z_low = 0.0;
  double value = 0.0;
  std::size_t vertices_checked = 0;
};

/// Issuer's objective for a security with payments y (H at each state).
double issuer_objective(const AdverseSelectionModel& model, const std::vector<double>& payments, double z_low);

/// Best security for a fixed z_low among the vertices of
/// {H in I(0, x) : E[H | worst signal] = z_low}.
std::optional<AdverseSelectionResult> solve_adverse_selection_at(const AdverseSelectionModel& model, double z_low,
                                                                 std::size_t max_vertices = 200000);

AdverseSelectionResult solve_adverse_selection(const AdverseSelectionModel& model, std::size_t z_grid = 64,
                                               std::size_t max_vertices = 200000);

}  // namespace mfi
