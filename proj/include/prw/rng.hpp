#pragma once

#include <cstdint>

namespace prw {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

// Stream labels mixed into per-replica seeds.
enum class Stream : std::uint64_t { Down = 1, Up = 2, Coin = 3, Graft = 4 };

inline constexpr std::uint64_t replica_seed(std::uint64_t master, std::uint64_t replica) noexcept {
  return mix_seed(master, replica);
}

inline constexpr std::uint64_t stream_seed(std::uint64_t seed, Stream s) noexcept {
  return mix_seed(seed, static_cast<std::uint64_t>(s) * 0x2545f4914f6cdd1dULL);
}

inline constexpr double to_unit(std::uint64_t x) noexcept {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Counter-based uniform in [0,1): a pure function of (seed, label, n).
inline constexpr double hash_uniform(std::uint64_t seed, std::uint64_t label,
                                     std::uint64_t n) noexcept {
  return to_unit(splitmix64(mix_seed(mix_seed(seed, label), n)));
}

// SplitMix64 sequence; cheap to seed, which matters for millions of short replicas.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double next() { return to_unit(next_u64()); }
  bool bernoulli(double p) { return next() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace prw
