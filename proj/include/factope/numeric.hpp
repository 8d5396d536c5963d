#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace factope {

/// Neumaier-compensated running sum. Terms must be added in a fixed order for reproducible results.
class CompensatedSum {
 public:
  constexpr CompensatedSum() = default;

  constexpr void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  constexpr CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  [[nodiscard]] constexpr double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

[[nodiscard]] inline double compensated_sum(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (double v : values) {
    acc.add(v);
  }
  return acc.value();
}

/// SplitMix64 finaliser.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31U);
}

/// Derives an independent 64-bit seed for sub-stream `index` of `master`.
/// Counter-based: the result depends only on the two arguments, never on call order.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) + 0x9E3779B97F4A7C15ULL * (index + 1U));
}

/// SplitMix64 generator. O(1) seeding makes one stream per trajectory affordable.
/// Satisfies std::uniform_random_bit_generator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed) noexcept : state_{seed} {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
template <class Engine>
[[nodiscard]] double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11U) * 0x1.0p-53;
}

/// FNV-1a over bytes; used for stable content hashes in manifests.
[[nodiscard]] constexpr std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace factope
