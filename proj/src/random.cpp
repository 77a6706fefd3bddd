#include "behsynth/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string_view>

namespace behsynth {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> streams) {
  std::uint64_t h = splitmix(base);
  for (auto s : streams) h = splitmix(h ^ splitmix(s + 0x632be59bd9b4e019ULL));
  return h;
}

std::uint64_t fnv1a_64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below: zero bound");
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % bound;
}

int Rng::between(int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("Rng::between: empty range");
  return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

bool Rng::bernoulli(double p) {
  if (p <= 0.0) {
    (void)engine_();
    return false;
  }
  if (p >= 1.0) {
    (void)engine_();
    return true;
  }
  // p * 2^53 is exact scaling by a power of two; floor keeps it integral.
  const auto threshold = static_cast<std::uint64_t>(p * 0x1.0p53);
  return (engine_() >> 11) < threshold;
}

std::size_t Rng::weighted(std::span<const std::uint32_t> weights) {
  std::uint64_t total = 0;
  for (auto w : weights) total += w;
  if (total == 0) throw std::invalid_argument("Rng::weighted: all weights zero");
  std::uint64_t pick = below(total);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (pick < weights[i]) return i;
    pick -= weights[i];
  }
  return weights.size() - 1;
}

double Rng::normal() {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace behsynth
