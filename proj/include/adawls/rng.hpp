#pragma once

#include <cstdint>
#include <limits>

namespace adawls {

/// Splittable counter-based random stream.
///
/// Output number i of a stream is a keyed hash of (key, i), so a stream is
/// fully described by its key and counter. `split(id)` derives an independent
/// child key from the parent key, which lets every (iteration, row, point)
/// coordinate own a stream and be generated in any order or in parallel with
/// identical results.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0) noexcept;

  /// Independent child stream; does not advance this stream.
  [[nodiscard]] RngStream split(std::uint64_t id) const noexcept;

  std::uint64_t next_u64() noexcept;

  /// Uniform double in the open interval (0, 1).
  double uniform() noexcept;

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept { return next_u64(); }

 private:
  struct FromKey {};
  RngStream(FromKey, std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stateless 64-bit finalizer (splitmix64).
std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace adawls
