#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "mfi/cdf.hpp"

namespace mfi {

/// I(lower, upper). A missing bound is -inf (lower) or +inf (upper).
struct MonotoneInterval {
  std::optional<PiecewiseCdf> lower;
  std::optional<PiecewiseCdf> upper;

  MonotoneInterval() = default;
  MonotoneInterval(std::optional<PiecewiseCdf> lo, std::optional<PiecewiseCdf> hi, double tol = kDefaultTol);

  bool bounded() const { return lower.has_value() && upper.has_value(); }
};

MonotoneInterval quantile_interval(const PiecewiseCdf& prior, double tau, double epsilon = 0.0);

enum class Touch { UpperAtLeft, LowerAtRightLimit, Both, None };
enum class ViolationReason { StrictlyInteriorNotFlat, FlatTouchesNeitherBound };

struct FlatSegment {
  double x_lo;  // -inf for the lower tail
  double x_hi;  // +inf for the upper tail
  double level;
  Touch touch;
};

struct Violation {
  double x_lo;
  double x_hi;
  ViolationReason reason;
};

struct ExtremeVerdict {
  bool is_extreme = false;
  std::vector<FlatSegment> flat_segments;
  std::vector<Violation> violations;
};

bool contains(const MonotoneInterval& interval, const PiecewiseCdf& h, double tol = kDefaultTol);

ExtremeVerdict is_extreme_point(const MonotoneInterval& interval, const PiecewiseCdf& h,
                                double tol = kDefaultTol);

PiecewiseCdf sample_extreme_point(const MonotoneInterval& interval, std::uint64_t seed);

/// Step function inside the interval that matches h at h's breakpoints to
/// within tol. Step inputs are returned unchanged.
PiecewiseCdf atomize(const MonotoneInterval& interval, const PiecewiseCdf& h, double tol = 1e-10);

Mixture decompose_as_mixture(const MonotoneInterval& interval, const PiecewiseCdf& h,
                             std::size_t max_components, double tol = kDefaultTol);

const char* to_string(Touch touch);
const char* to_string(ViolationReason reason);

}  // namespace mfi
