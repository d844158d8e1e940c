#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace btg {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b,
                              std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

// Deterministic RNG wrapper. mt19937_64 output is pinned by the standard;
// the distributions below are hand-rolled so draws are identical across
// platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  // Index draw from (possibly unnormalized up to rounding) log-probabilities.
  // Entries with zero mass are never selected.
  int categorical_from_logps(std::span<const double> logps) {
    double u = uniform01();
    double cum = 0.0;
    int last = -1;
    for (int idx = 0; idx < static_cast<int>(logps.size()); ++idx) {
      double p = std::exp(logps[idx]);
      if (p <= 0.0) continue;
      last = idx;
      cum += p;
      if (u < cum) return idx;
    }
    return last;  // rounding slack lands on the final supported entry
  }

  int categorical_from_probs(std::span<const double> probs) {
    double u = uniform01();
    double cum = 0.0;
    int last = -1;
    for (int idx = 0; idx < static_cast<int>(probs.size()); ++idx) {
      if (probs[idx] <= 0.0) continue;
      last = idx;
      cum += probs[idx];
      if (u < cum) return idx;
    }
    return last;
  }

  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(xs[i - 1], xs[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace btg
