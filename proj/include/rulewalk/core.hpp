#pragma once
// Shared primitives: ids, error types, deterministic RNG streams.
//
// All randomness in the library flows through RngStream, a splitmix64
// counter generator. Streams are derived from (seed, lane, index, sub)
// tuples so independent units of work (episodes, rollouts) get
// reproducible, platform-independent randomness. std::shuffle and the
// std distributions are avoided on purpose: their output differs across
// standard library implementations.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rulewalk {

using NodeId = std::int32_t;
using RelId = std::int32_t;
using TypeId = std::int32_t;

// Stay-in-place action. Not a schema relation; stripped before rule matching.
constexpr RelId kNoOpRelation = -1;

// Configuration / input-file problems. The CLI maps these to exit code 1,
// all other exceptions to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {
    // burn-in decorrelates small seeds
    splitmix64(state_);
    splitmix64(state_);
  }

  // Derives an independent stream from a seed and up to three lane indices.
  static RngStream derive(std::uint64_t seed, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = seed;
    std::uint64_t m = splitmix64(s) ^ (a * 0xd1342543de82ef95ULL);
    m = splitmix64(m) ^ (b * 0xaf251af3b0f025b5ULL);
    m = splitmix64(m) ^ (c * 0x9e6c63d0a38271c9ULL);
    return RngStream(splitmix64(m));
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n). Lemire multiply-shift; bias is below 2^-32 for the
  // range sizes used here and the result is platform independent.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Fisher-Yates. Deterministic replacement for std::shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Samples k distinct indices from [0, n) (partial Fisher-Yates).
  std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n,
                                                        std::uint32_t k) {
    std::vector<std::uint32_t> idx(n);
    for (std::uint32_t i = 0; i < n; ++i) idx[i] = i;
    if (k > n) k = n;
    for (std::uint32_t i = 0; i < k; ++i) {
      std::uint32_t j = i + static_cast<std::uint32_t>(next_below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  // Index draw proportional to weights (linear scan; weights need not sum
  // to 1). Falls back to the last index on accumulated rounding slack.
  std::size_t next_weighted(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

 private:
  std::uint64_t state_;
};

}  // namespace rulewalk
