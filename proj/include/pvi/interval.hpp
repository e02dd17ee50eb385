#pragma once

#include <limits>
#include <string>

namespace pvi {

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static Interval real_line() { return {}; }
  static Interval positive() {
    return {0.0, std::numeric_limits<double>::infinity()};
  }

  [[nodiscard]] bool contains(double v) const { return v > lo && v < hi; }
  [[nodiscard]] bool subset_of(const Interval& other) const {
    return lo >= other.lo && hi <= other.hi;
  }
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const Interval&, const Interval&) = default;
};

}  // namespace pvi
