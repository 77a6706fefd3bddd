#pragma once

#include <span>
#include <string>
#include <vector>

#include "behsynth/core.hpp"
#include "behsynth/prompt.hpp"

namespace behsynth {

/// Probability vector over a dense categorical support.
class CategoricalDistribution {
 public:
  /// Throws DataError for negative entries or a sum more than 1e-9 from 1.
  explicit CategoricalDistribution(std::vector<double> probabilities);

  /// Normalises non-negative counts; throws DataError when they sum to zero.
  static CategoricalDistribution from_counts(std::span<const double> counts);

  [[nodiscard]] std::size_t support_size() const { return p_.size(); }
  [[nodiscard]] const std::vector<double>& probabilities() const { return p_; }
  [[nodiscard]] double operator[](std::size_t i) const { return p_[i]; }

 private:
  std::vector<double> p_;
};

/// Empirical intent frequencies over [0, N_B).
[[nodiscard]] CategoricalDistribution intent_histogram(std::span<const BehaviorSequence> sequences,
                                                       const Vocabularies& vocab);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Survival function of the Kolmogorov distribution, P(K > lambda).
[[nodiscard]] double kolmogorov_survival(double lambda);

/// Two-sample KS: D = sup |F_a - F_b|; p from the asymptotic Kolmogorov
/// distribution at sqrt(n m / (n + m)) * D.
[[nodiscard]] KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

using TokenSequence = std::vector<std::string>;

/// Corpus BLEU, candidates[i] scored against references[i]: clipped n-gram
/// precisions for n in [1, max_n], uniform-weight geometric mean, brevity
/// penalty exp(1 - r/c) when c < r. Orders with no candidate n-grams in the
/// whole corpus are left out of the mean; any zero precision yields 0.
[[nodiscard]] double bleu(std::span<const TokenSequence> references,
                          std::span<const TokenSequence> candidates, int max_n = 4);

/// -ln(sum sqrt(p_i q_i)), coefficient floored at 1e-12.
[[nodiscard]] double bhattacharyya_distance(const CategoricalDistribution& p,
                                            const CategoricalDistribution& q);

/// Jensen-Shannon divergence in bits, in [0, 1].
[[nodiscard]] double jsd(const CategoricalDistribution& p, const CategoricalDistribution& q);

/// Four tokens per event: d=<weekday> t=<hour> l=<location> b=<intent>.
[[nodiscard]] TokenSequence tokenize(std::span<const BehaviorEvent> events);

struct FidelityReport {
  double ks_statistic = 0.0;
  double ks_p = 1.0;
  double weekday_ks_statistic = 0.0;
  double weekday_ks_p = 1.0;
  double bleu = 0.0;
  double bd = 0.0;
  double jsd = 0.0;
  double pass1 = 0.0;
  std::size_t bleu_pairs = 0;     ///< users paired by id; 0 means pooled
  std::size_t real_events = 0;
  std::size_t synthetic_events = 0;
};

/// Table-style comparison of synthetic against real data. `records` may be
/// empty, in which case pass1 is reported as NaN.
[[nodiscard]] FidelityReport fidelity_report(const Dataset& real, const Dataset& synth,
                                             std::span<const GenerationRecord> records);

}  // namespace behsynth
