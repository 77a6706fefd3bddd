#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace behsynth {

/// Mixes a base seed with stream identifiers (SplitMix64 finalizer chain).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base,
                                        std::initializer_list<std::uint64_t> streams);

[[nodiscard]] std::uint64_t fnv1a_64(std::string_view text);

/// Platform-stable random source. The engine (mt19937_64) is fully specified
/// by the standard; every sampling routine here is written out explicitly so
/// that no implementation-defined distribution affects a decision.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). Rejection sampling, bias-free.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform integer in [lo, hi].
  int between(int lo, int hi);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// True with probability `p`; compares integers so the decision is exact.
  bool bernoulli(double p);

  /// Index drawn proportionally to non-negative integer weights.
  std::size_t weighted(std::span<const std::uint32_t> weights);

  /// Standard normal via Box-Muller (used only for test/synthetic features).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace behsynth
