#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

namespace pvi {

/// Welford accumulator. Order-dependent in the last bits, so callers feed
/// values in a fixed index order.
class RunningStats {
 public:
  void push(double v) {
    ++n_;
    const double delta = v - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (v - mean_);
  }

  [[nodiscard]] std::size_t count() const { return n_; }
  [[nodiscard]] double mean() const { return mean_; }

  /// Unbiased sample variance; NaN with fewer than two values.
  [[nodiscard]] double variance() const {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1)
                  : std::numeric_limits<double>::quiet_NaN();
  }

  /// stddev / sqrt(n); +inf when n < 2 since the spread is unknown.
  [[nodiscard]] double standard_error() const {
    if (n_ < 2) return std::numeric_limits<double>::infinity();
    return std::sqrt(variance() / static_cast<double>(n_));
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace pvi
