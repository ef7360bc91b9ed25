#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace sharerec {

/// Deterministic xoshiro256** generator. All randomness in the library goes
/// through this type so that results are reproducible bit-for-bit across
/// platforms (std::uniform_*_distribution is implementation-defined and is
/// deliberately avoided).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // SplitMix64 expansion of the seed into the full state.
    std::uint64_t z = seed;
    for (auto& word : state_) {
      z += 0x9e3779b97f4a7c15ULL;
      std::uint64_t x = z;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
      word = x ^ (x >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection-free unbiased (Lemire).
  std::uint64_t uniform_index(std::uint64_t n) {
    __uint128_t m = static_cast<__uint128_t>(next()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = static_cast<__uint128_t>(next()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct values from [0, n), in random order.
  std::vector<std::int32_t> sample_without_replacement(std::int32_t n, std::int32_t k) {
    std::vector<std::int32_t> pool(static_cast<size_t>(n));
    for (std::int32_t i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
    for (std::int32_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::int32_t>(uniform_index(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
    }
    pool.resize(static_cast<size_t>(k));
    return pool;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// One run seed fans out into independent named streams ("split", "init",
/// "neg", ...) so that toggling one feature never shifts another's draws.
inline Rng make_stream(std::uint64_t seed, std::string_view purpose) {
  return Rng(seed ^ fnv1a(purpose));
}

}  // namespace sharerec
