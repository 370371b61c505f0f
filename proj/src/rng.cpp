#include "adawls/rng.hpp"

namespace adawls {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kSplitSalt = 0xD1B54A32D192ED03ULL;
constexpr std::uint64_t kSeedSalt = 0x2545F4914F6CDD1DULL;
}  // namespace

std::uint64_t mix64(std::uint64_t z) noexcept {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed) noexcept : key_(mix64(seed ^ kSeedSalt)) {}

RngStream RngStream::split(std::uint64_t id) const noexcept {
  return RngStream(FromKey{}, mix64(key_ ^ mix64(id * kGolden + kSplitSalt)));
}

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t c = counter_++;
  return mix64(key_ + mix64(c));
}

double RngStream::uniform() noexcept {
  // 53 random bits, shifted by half an ulp so 0 and 1 are excluded.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t bound) noexcept {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace adawls
