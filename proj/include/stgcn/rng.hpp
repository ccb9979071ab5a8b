#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace stgcn::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives the seed of a named substream from a root seed. Every piece of
/// randomness in a run is drawn from a stream obtained this way, so a run is
/// a pure function of its root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view name,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(root ^ fnv1a(name)) + index);
}

/// Deterministic random stream. Floating-point values are produced by
/// explicit bit manipulation of the mt19937_64 output (whose sequence the
/// standard pins down), so results are identical across platforms.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1), both endpoints excluded.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on [-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }

  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t rem = (kMax % n + 1) % n;
    const std::uint64_t lim = kMax - rem;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x > lim);
    return x % n;
  }

  /// Standard normal via Box-Muller (pair cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace stgcn::rng
