#pragma once

#include <cstdint>
#include <limits>

namespace cpe {

// Stafford variant 13 of the SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent key from a parent key and a stream index. Used for
// (master_seed, trial_index) and (trial_key, arm, pull_index) derivations.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(mix64(parent ^ 0x6a09e667f3bcc909ULL) + mix64(index + 0x9e3779b97f4a7c15ULL));
}

// Counter-based generator: the i-th output is a pure function of (key, i),
// so a stream can be split or replayed without carrying hidden state.
// Satisfies UniformRandomBitGenerator, but the library only draws through
// uniform()/bernoulli() so results do not depend on the standard library's
// distribution implementations.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterRng(std::uint64_t key = 0, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    return mix64(key_ + mix64(counter_++ * 0x9e3779b97f4a7c15ULL + 0x3c6ef372fe94f82bULL));
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

  // Uniform integer in [0, n). Rejection keeps it exactly uniform.
  constexpr std::uint64_t below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x = (*this)();
    while (x >= limit) x = (*this)();
    return x % n;
  }

  constexpr CounterRng split(std::uint64_t index) const noexcept {
    return CounterRng(derive_key(key_, index));
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace cpe
