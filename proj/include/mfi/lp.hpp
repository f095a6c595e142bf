#pragma once

#include <cstddef>
#include <vector>

namespace mfi::lp {

enum class Relation { LessEq, GreaterEq, Equal };

struct Row {
  std::vector<double> coef;
  Relation rel = Relation::LessEq;
  double rhs = 0.0;
};

// maximize objective . x  subject to rows, x >= 0.
struct Problem {
  std::vector<double> objective;
  std::vector<Row> rows;
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
  Status status = Status::Infeasible;
  std::vector<double> x;
  double value = 0.0;
  // One multiplier per row, in the sign convention of the row as given.
  std::vector<double> duals;
  double dual_value = 0.0;
  double duality_gap = 0.0;
  double dual_infeasibility = 0.0;
  std::size_t pivots = 0;
};

// Dense two-phase tableau simplex. Dantzig pricing, switching to Bland's rule
// while pivots are degenerate.
Result solve(const Problem& problem, double tol = 1e-10);

}  // namespace mfi::lp
