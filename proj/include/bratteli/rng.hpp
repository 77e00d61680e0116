#pragma once

// Counter-based random streams.
//
// Every random choice in the toolkit is a pure function of a 64-bit key and a
// draw counter, so results never depend on traversal order or on how trials
// are scheduled across threads. The functions in this header are part of the
// stable interface: changing them changes every recorded experiment.

#include <cstdint>
#include <span>
#include <utility>

namespace bratteli::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Domain tags keep the different key families apart.
inline constexpr std::uint64_t kOrderTag = 0x6f72646572000001ULL;
inline constexpr std::uint64_t kTrialTag = 0x747269616c000002ULL;
inline constexpr std::uint64_t kSubsetTag = 0x7375627365000003ULL;
inline constexpr std::uint64_t kInstanceTag = 0x696e737461000004ULL;

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// The x-th output of a SplitMix64 generator whose state starts at `key`.
constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t x) noexcept {
  return mix64(key + kGolden * (x + 1));
}

/// Seed of trial `trial` under master seed `master`.
constexpr std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) noexcept {
  return derive(master ^ kTrialTag, trial);
}

/// Key of the permutation stream of vertex `v` at `level` for an order seeded by `seed`.
constexpr std::uint64_t vertex_key(std::uint64_t seed, std::uint64_t level,
                                   std::uint64_t v) noexcept {
  return derive(derive(seed ^ kOrderTag, level), v);
}

__extension__ typedef unsigned __int128 uint128;

class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t next() noexcept { return derive(key_, counter_++); }

  /// Uniform integer in [0, n), n >= 1. Lemire's multiply-shift with rejection.
  std::uint64_t bounded(std::uint64_t n) noexcept {
    uint128 m = static_cast<uint128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<uint128>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates from the top rank down: the first draw fixes the element at the
/// last position. `items` must hold the identity on entry for this to match
/// `first_pick`.
template <class T>
void shuffle_top_down(CounterStream& stream, std::span<T> items) noexcept {
  for (std::size_t r = items.size(); r > 1; --r) {
    const auto j = static_cast<std::size_t>(stream.bounded(r));
    std::swap(items[r - 1], items[j]);
  }
}

/// The element that `shuffle_top_down` places last when applied to the identity
/// of length n, computed without materializing the permutation.
inline std::uint64_t first_pick(std::uint64_t key, std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  CounterStream stream(key);
  return stream.bounded(n);
}

}  // namespace bratteli::rng
