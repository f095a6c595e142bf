#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mfi/cdf.hpp"
#include "mfi/interval.hpp"
#include "mfi/lp.hpp"

namespace mfi {

/// One decision variable of the discretized interval: H(x) for Right knots,
/// H(x-) for Left knots.
struct Knot {
  double x;
  Side side;
  double lo;
  double hi;
};

/// Chain of knots y_0 <= y_1 <= ... with per-knot boxes.
///
/// Step layout: y_0 is the lower tail and y_{j+1} = H on [g_j, g_{j+1}).
/// Piecewise-linear layout: pairs (H(g_i-), H(g_i)) with H linear between
/// H(g_i) and H(g_{i+1}-).
struct KnotLayout {
  Kind kind = Kind::Step;
  std::vector<double> grid;
  std::vector<Knot> knots;

  std::size_t size() const { return knots.size(); }
  PiecewiseCdf to_function(const std::vector<double>& y) const;
  std::vector<double> from_function(const PiecewiseCdf& h) const;
  /// Coefficients c with sum_k c_k y_k = H(x).
  std::vector<std::pair<std::size_t, double>> evaluation(double x) const;
};

KnotLayout make_layout(const MonotoneInterval& interval, Kind kind, const std::vector<double>& extra_points = {});

/// Scalar function for objectives: tabulated (linear interpolation, constant
/// outside) or analytic.
struct Integrand {
  std::vector<double> grid;
  std::vector<double> values;
  std::function<double(double)> analytic;

  double operator()(double x) const;
  /// Mean over [a, b]; exact for tabulated data, 5-point Gauss-Legendre on
  /// each tabulated sub-cell for analytic data.
  double mean(double a, double b) const;
};

/// Exact Stieltjes integral of v against h.
double stieltjes(const Integrand& v, const PiecewiseCdf& h);

struct LinearConstraint {
  std::vector<double> weights;  // one per knot
  lp::Relation relation = lp::Relation::Equal;
  double rhs = 0.0;
  std::string label;
};

enum class Sense { Max, Min };

struct MonotoneLp {
  MonotoneInterval interval;
  KnotLayout layout;
  std::vector<double> objective;  // one per knot
  double objective_constant = 0.0;
  Sense sense = Sense::Max;
  std::vector<LinearConstraint> constraints;

  MonotoneLp(MonotoneInterval iv, Kind kind, const std::vector<double>& extra_points = {});

  std::size_t size() const { return layout.size(); }

  /// Knot weights w with sum_k w_k y_k = integral of v dH over the grid.
  std::vector<double> stieltjes_weights(const Integrand& v) const;
  /// Knot weights w with sum_k w_k y_k = sum_s mass_s H(states_s).
  std::vector<double> point_weights(const std::vector<double>& states, const std::vector<double>& mass) const;

  double evaluate_objective(const std::vector<double>& y) const;
};

struct LpSolution {
  PiecewiseCdf h;
  std::vector<double> knot_values;
  double value = 0.0;
  std::vector<std::size_t> active_constraints;
  ExtremeVerdict structure;
  double duality_gap = 0.0;
  double max_residual = 0.0;
};

LpSolution solve(const MonotoneLp& lp);

std::vector<LpSolution> enumerate_vertices(const MonotoneLp& lp, std::size_t max_count);

}  // namespace mfi
