#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace hierlearn {

/// Derives a child seed from a master seed and a stream name, so that
/// one 64-bit experiment seed fans out into independent named streams
/// ("generator", "init", "train", ...) in a platform-independent way.
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view name) {
  // FNV-1a over the name, then a splitmix64 finalizer mixes in the master.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Deterministic random source. Wraps std::mt19937_64 (whose output sequence
/// is pinned by the standard) and generates variates with fixed algorithms
/// instead of std:: distributions, which may differ between libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  Rng(std::uint64_t master, std::string_view stream) : gen_(stream_seed(master, stream)) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi], inclusive, by rejection (unbiased).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(gen_());  // full range
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return lo + static_cast<std::int64_t>(r % span);
  }

  /// Standard normal via Box-Muller; the spare variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Random sign, +1 or -1.
  int sign() { return (gen_() >> 63) ? 1 : -1; }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hierlearn
