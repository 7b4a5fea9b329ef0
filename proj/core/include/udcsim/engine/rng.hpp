#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace udc::engine {

// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// A reproducible random stream. Distributions are implemented here rather
// than taken from <random> because the standard leaves their algorithms
// unspecified, and outputs must be byte-identical across toolchains.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller; returns the cached second variate on alternate calls.
  double normal(double mean = 0.0, double stddev = 1.0);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Label-keyed stream derivation: the same (seed, label) always yields the
// same stream, and a stream does not depend on which other streams exist.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label) noexcept {
  return splitmix64(master_seed ^ splitmix64(fnv1a(label)));
}

inline std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label,
                                 std::uint64_t index) noexcept {
  return splitmix64(derive_seed(master_seed, label) + splitmix64(index + 1));
}

inline RngStream derive_rng(std::uint64_t master_seed, std::string_view label) {
  return RngStream(derive_seed(master_seed, label));
}

inline RngStream derive_rng(std::uint64_t master_seed, std::string_view label,
                            std::uint64_t index) {
  return RngStream(derive_seed(master_seed, label, index));
}

}  // namespace udc::engine
