#pragma once

// Seedable generator used everywhere randomness is needed.
//
// Engine: xoshiro256** (Blackman & Vigna). The 256-bit state is filled from a
// 64-bit key with SplitMix64. Streams are derived, never shared: split(s)
// hashes (key, s) into a fresh key, so trial t of config c always sees the
// same draws regardless of which thread runs it or in what order.
//
// Derived draws, fixed so ports to other languages can follow them:
//   uniform01       top 53 bits of next() times 2^-53, in [0, 1)
//   uniform_index   Lemire's multiply-shift with rejection, unbiased in [0, n)
//   normal          Box-Muller, both outputs used (second is cached)

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace sqrk {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix_key(std::uint64_t key, std::uint64_t stream) noexcept {
  std::uint64_t s = key ^ (0xD1B54A32D192ED03ULL * (stream + 1));
  splitmix64(s);
  return splitmix64(s);
}

__extension__ using uint128 = unsigned __int128;

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept : key_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = detail::splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next(); }

  result_type next() noexcept {
    const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Independent generator for sub-stream `stream`. Depends only on the key
  /// this generator was constructed with, not on how many draws were made.
  Rng split(std::uint64_t stream) const noexcept { return Rng(detail::mix_key(key_, stream)); }

  Rng split(std::uint64_t a, std::uint64_t b) const noexcept { return split(a).split(b); }

  std::uint64_t key() const noexcept { return key_; }

  double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Unbiased draw from {0, ..., n - 1}. n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    detail::uint128 product = static_cast<detail::uint128>(next()) * n;
    auto low = static_cast<std::uint64_t>(product);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        product = static_cast<detail::uint128>(next()) * n;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t key_;
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sqrk
