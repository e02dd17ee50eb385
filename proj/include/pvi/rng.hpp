#pragma once

#include <cstdint>
#include <limits>

namespace pvi {

/// Seed plus substream index. Identical pairs reproduce identical draws.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// Derives an independent child stream; used to give sample i of an
  /// estimator its own stream so results do not depend on evaluation order.
  [[nodiscard]] RngState substream(std::uint64_t index) const;

  friend bool operator==(const RngState&, const RngState&) = default;
};

/// Counter-based generator: output k is a SplitMix64 hash of a key derived
/// from (seed, stream) and the counter k. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(RngState state);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Box-Muller, one variate per pair of uniforms.
  double standard_normal();

  [[nodiscard]] std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace pvi
