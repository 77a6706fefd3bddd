#include "behsynth/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <fmt/core.h>

namespace behsynth {

CategoricalDistribution::CategoricalDistribution(std::vector<double> probabilities)
    : p_(std::move(probabilities)) {
  if (p_.empty()) throw DataError("distribution with empty support");
  double sum = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0)) throw DataError("distribution has a negative or NaN probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DataError(fmt::format("probabilities sum to {}, not 1", sum));
}

CategoricalDistribution CategoricalDistribution::from_counts(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) {
    if (!(c >= 0.0)) throw DataError("negative count");
    total += c;
  }
  if (total <= 0.0) throw DataError("cannot normalise all-zero counts");
  std::vector<double> p(counts.begin(), counts.end());
  for (double& v : p) v /= total;
  return CategoricalDistribution(std::move(p));
}

CategoricalDistribution intent_histogram(std::span<const BehaviorSequence> sequences,
                                         const Vocabularies& vocab) {
  std::vector<double> counts(static_cast<std::size_t>(vocab.intent_count()), 0.0);
  double total = 0.0;
  for (const auto& seq : sequences) {
    for (const auto& e : seq.events) {
      if (e.intent_id < 0 || e.intent_id >= vocab.intent_count()) {
        throw DataError(fmt::format("intent {} outside vocabulary", e.intent_id));
      }
      counts[static_cast<std::size_t>(e.intent_id)] += 1.0;
      total += 1.0;
    }
  }
  if (total == 0.0) throw DataError("intent_histogram: no events");
  return CategoricalDistribution::from_counts(counts);
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-theta form converges fast for small arguments.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      cdf += std::exp(-odd * odd * pi2 / (8.0 * lambda * lambda));
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  // Once either sample is exhausted the gap only shrinks towards zero.
  const double effective = n * m / (n + m);
  return {d, kolmogorov_survival(std::sqrt(effective) * d)};
}

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts count_ngrams(const TokenSequence& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> gram;
    gram.reserve(n);
    for (std::size_t k = 0; k < n; ++k) gram.emplace_back(tokens[i + k]);
    ++counts[gram];
  }
  return counts;
}

}  // namespace

double bleu(std::span<const TokenSequence> references, std::span<const TokenSequence> candidates,
            int max_n) {
  if (references.empty() || candidates.empty()) throw DataError("bleu: empty corpus");
  if (references.size() != candidates.size()) {
    throw DataError("bleu: references and candidates must pair up one-to-one");
  }
  if (max_n < 1) throw DataError("bleu: max_n must be >= 1");

  double log_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= max_n; ++n) {
    std::size_t matched = 0;
    std::size_t total = 0;
    for (std::size_t s = 0; s < candidates.size(); ++s) {
      const auto cand = count_ngrams(candidates[s], static_cast<std::size_t>(n));
      const auto ref = count_ngrams(references[s], static_cast<std::size_t>(n));
      for (const auto& [gram, count] : cand) {
        total += count;
        auto it = ref.find(gram);
        if (it != ref.end()) matched += std::min(count, it->second);
      }
    }
    if (total == 0) continue;
    if (matched == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
    ++orders;
  }
  if (orders == 0) return 0.0;

  std::size_t c = 0;
  std::size_t r = 0;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    c += candidates[s].size();
    r += references[s].size();
  }
  const double bp = c >= r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return std::clamp(bp * std::exp(log_sum / orders), 0.0, 1.0);
}

double bhattacharyya_distance(const CategoricalDistribution& p, const CategoricalDistribution& q) {
  if (p.support_size() != q.support_size()) throw DataError("bhattacharyya: support size mismatch");
  // 1 - BC equals half the squared Hellinger sum for normalised inputs; this
  // form is exact for identical distributions.
  double h2 = 0.0;
  for (std::size_t i = 0; i < p.support_size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    h2 += d * d;
  }
  const double gap = std::min(0.5 * h2, 1.0 - 1e-12);
  return -std::log1p(-gap);
}

double jsd(const CategoricalDistribution& p, const CategoricalDistribution& q) {
  if (p.support_size() != q.support_size()) throw DataError("jsd: support size mismatch");
  auto term = [](double a, double m) { return a > 0.0 ? a * std::log2(a / m) : 0.0; };
  double sum = 0.0;
  for (std::size_t i = 0; i < p.support_size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    sum += term(p[i], m) + term(q[i], m);
  }
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

TokenSequence tokenize(std::span<const BehaviorEvent> events) {
  TokenSequence out;
  out.reserve(events.size() * 4);
  for (const auto& e : events) {
    out.push_back(fmt::format("d={}", e.weekday));
    out.push_back(fmt::format("t={}", e.timeslot / 4));
    out.push_back(fmt::format("l={}", e.location_id));
    out.push_back(fmt::format("b={}", e.intent_id));
  }
  return out;
}

FidelityReport fidelity_report(const Dataset& real, const Dataset& synth,
                               std::span<const GenerationRecord> records) {
  if (!real.vocabularies.same_event_space(synth.vocabularies)) {
    throw DataError("fidelity: real and synthetic datasets use different vocabularies");
  }
  FidelityReport report;
  std::vector<double> real_slots, synth_slots, real_days, synth_days;
  for (const auto& s : real.sequences) {
    for (const auto& e : s.events) {
      real_slots.push_back(e.timeslot);
      real_days.push_back(e.weekday);
    }
  }
  for (const auto& s : synth.sequences) {
    for (const auto& e : s.events) {
      synth_slots.push_back(e.timeslot);
      synth_days.push_back(e.weekday);
    }
  }
  report.real_events = real_slots.size();
  report.synthetic_events = synth_slots.size();

  const auto ks = ks_two_sample(real_slots, synth_slots);
  report.ks_statistic = ks.statistic;
  report.ks_p = ks.p_value;
  const auto ks_days = ks_two_sample(real_days, synth_days);
  report.weekday_ks_statistic = ks_days.statistic;
  report.weekday_ks_p = ks_days.p_value;

  std::vector<TokenSequence> refs;
  std::vector<TokenSequence> cands;
  for (const auto& s : synth.sequences) {
    if (const auto* r = real.find(s.user_id)) {
      refs.push_back(tokenize(r->events));
      cands.push_back(tokenize(s.events));
    }
  }
  report.bleu_pairs = refs.size();
  if (refs.empty()) {
    TokenSequence all_ref;
    TokenSequence all_cand;
    for (const auto& s : real.sequences) {
      auto t = tokenize(s.events);
      all_ref.insert(all_ref.end(), t.begin(), t.end());
    }
    for (const auto& s : synth.sequences) {
      auto t = tokenize(s.events);
      all_cand.insert(all_cand.end(), t.begin(), t.end());
    }
    refs.push_back(std::move(all_ref));
    cands.push_back(std::move(all_cand));
  }
  report.bleu = bleu(refs, cands, 4);

  const auto p = intent_histogram(real.sequences, real.vocabularies);
  const auto q = intent_histogram(synth.sequences, synth.vocabularies);
  report.bd = bhattacharyya_distance(p, q);
  report.jsd = jsd(p, q);
  report.pass1 = records.empty() ? std::numeric_limits<double>::quiet_NaN() : pass_at_1(records);
  return report;
}

}  // namespace behsynth
