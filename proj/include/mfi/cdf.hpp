#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace mfi {

inline constexpr double kDefaultTol = 1e-9;
// Snapping tolerance for quantile searches. Constructed posteriors hit the
// target level only up to accumulated rounding.
inline constexpr double kQuantileTol = 1e-12;

enum class Kind { Step, PiecewiseLinear };
enum class Side { Right, Left };
enum class QuantileSide { Lower, Upper };

/// Nondecreasing right-continuous function on a finite grid.
///
/// Below grid[0] the function equals its tail, which is the left limit at
/// grid[0]. At and above grid.back() it equals values.back(). Step functions
/// are constant on [x_i, x_{i+1}); piecewise-linear ones run linearly from
/// values[i] to the left limit at x_{i+1}.
class PiecewiseCdf {
 public:
  PiecewiseCdf() = default;
  PiecewiseCdf(std::vector<double> grid, std::vector<double> values, Kind kind,
               std::optional<std::vector<double>> left_limits = std::nullopt);

  static PiecewiseCdf dirac(double x);
  static PiecewiseCdf uniform(double a, double b);

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  Kind kind() const { return kind_; }
  const std::optional<std::vector<double>>& left_limits() const { return left_limits_; }
  std::size_t size() const { return grid_.size(); }
  bool empty() const { return grid_.empty(); }

  double tail() const { return left_limit(0); }
  double final_value() const { return values_.back(); }
  double left_limit(std::size_t i) const;

  double operator()(double x, Side side = Side::Right) const;

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
  Kind kind_ = Kind::Step;
  std::optional<std::vector<double>> left_limits_;
};

double evaluate(const PiecewiseCdf& f, double x, Side side = Side::Right);

double quantile(const PiecewiseCdf& g, double tau, QuantileSide side,
                double tol = kQuantileTol);

using Mixture = std::vector<std::pair<double, PiecewiseCdf>>;

PiecewiseCdf mix(const Mixture& components);

bool fosd_leq(const PiecewiseCdf& a, const PiecewiseCdf& b, double tol = kDefaultTol);

bool is_cdf(const PiecewiseCdf& f, double tol = kDefaultTol);

/// Largest |a - b| over merged breakpoints, right values and left limits.
double sup_distance(const PiecewiseCdf& a, const PiecewiseCdf& b);

struct TruncationBounds {
  PiecewiseCdf lower;  // F_R
  PiecewiseCdf upper;  // F_L
};

TruncationBounds truncation_bounds(const PiecewiseCdf& f, double tau, double epsilon = 0.0);

std::vector<double> merge_grids(const std::vector<const PiecewiseCdf*>& fs,
                                const std::vector<double>& extra = {});

/// Same function on a grid that contains f.grid().
PiecewiseCdf refine(const PiecewiseCdf& f, const std::vector<double>& grid);

/// a*f + b with a > 0.
PiecewiseCdf affine(const PiecewiseCdf& f, double a, double b);

/// Drops explicit left limits that the kind already implies.
PiecewiseCdf canonical(const PiecewiseCdf& f);

/// Same function with breakpoints that carry no information removed.
PiecewiseCdf simplify(const PiecewiseCdf& f);

/// Strictly increasing piecewise-linear CDF with no atoms.
bool is_continuous_strictly_increasing(const PiecewiseCdf& f, double tol = kDefaultTol);

}  // namespace mfi
