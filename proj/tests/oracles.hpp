#pragma once

// Independent reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <vector>

#include "behsynth/core.hpp"
#include "behsynth/fidelity.hpp"

namespace testing::oracles {

using namespace behsynth;

// Direct-summation oracles.
inline double jsd_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = (p[i] + q[i]) / 2.0;
    if (p[i] > 0) s += 0.5 * p[i] * std::log(p[i] / m) / std::log(2.0);
    if (q[i] > 0) s += 0.5 * q[i] * std::log(q[i] / m) / std::log(2.0);
  }
  return s;
}

inline double bd_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double bc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
  return -std::log(bc);
}

/// Brute-force corpus BLEU: n-grams compared position by position.
inline double bleu_oracle(const std::vector<TokenSequence>& refs, const std::vector<TokenSequence>& cands, int max_n) {
  auto same = [](const TokenSequence& a, std::size_t i, const TokenSequence& b, std::size_t j, int n) {
    for (int k = 0; k < n; ++k) {
      if (a[i + static_cast<std::size_t>(k)] != b[j + static_cast<std::size_t>(k)]) return false;
    }
    return true;
  };
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= max_n; ++n) {
    const auto un = static_cast<std::size_t>(n);
    double matched = 0.0, total = 0.0;
    for (std::size_t s = 0; s < cands.size(); ++s) {
      const auto& c = cands[s];
      const auto& r = refs[s];
      if (c.size() < un) continue;
      for (std::size_t i = 0; i + un <= c.size(); ++i) {
        total += 1.0;
        // Credit this occurrence when it is among the first min(cand, ref) occurrences.
        std::size_t earlier = 0;
        for (std::size_t j = 0; j < i; ++j) earlier += same(c, i, c, j, n);
        std::size_t in_ref = 0;
        for (std::size_t j = 0; j + un <= r.size(); ++j) in_ref += same(c, i, r, j, n);
        if (earlier < in_ref) matched += 1.0;
      }
    }
    if (total == 0.0) continue;
    if (matched == 0.0) return 0.0;
    log_sum += std::log(matched / total);
    ++orders;
  }
  if (orders == 0) return 0.0;
  double c = 0, r = 0;
  for (std::size_t s = 0; s < cands.size(); ++s) {
    c += static_cast<double>(cands[s].size());
    r += static_cast<double>(refs[s].size());
  }
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / orders);
}

inline double naive_overlap(const BehaviorSequence& g, const BehaviorSequence& r) {
  std::size_t hits = 0;
  for (const auto& a : g.events) {
    for (const auto& b : r.events) {
      if (a.week_index == b.week_index && a.weekday == b.weekday && a.timeslot == b.timeslot &&
          a.location_id == b.location_id) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(g.events.size());
}

inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0)); }

/// delta(eps) = integral of max(0, p(x) - e^eps q(x)) for p = N(0, s), q = N(d, s),
/// by composite Simpson over the region where the integrand is positive.
inline double delta_oracle(double d, double s, double eps) {
  const double upper = d / 2.0 - eps * s * s / d;
  const double lower = upper - 40.0 * s;
  const int n = 200000;
  const double h = (upper - lower) / n;
  auto f = [&](double x) { return std::max(0.0, phi(x / s) / s - std::exp(eps) * phi((x - d) / s) / s); };
  double sum = f(lower) + f(upper);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(lower + i * h);
  return sum * h / 3.0;
}

inline double epsilon_oracle(double d, double s, double delta) {
  double lo = 0.0, hi = 64.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (delta_oracle(d, s, mid) <= delta ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace testing::oracles
