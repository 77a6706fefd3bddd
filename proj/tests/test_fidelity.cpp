#include "doctest.h"

#include <cmath>

#include "behsynth/fidelity.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace behsynth;
using namespace testing::oracles;

TEST_CASE("KS statistic on small samples") {
  const std::vector<double> a{1, 2, 3, 4}, b{1, 2, 3, 5};
  CHECK(ks_two_sample(a, b).statistic == doctest::Approx(0.25));
  const auto self = ks_two_sample(a, a);
  CHECK(self.statistic == 0.0);
  CHECK(self.p_value == 1.0);
  const std::vector<double> lo{1, 2, 3}, hi{10, 11, 12, 13};
  CHECK(ks_two_sample(lo, hi).statistic == 1.0);
  CHECK_THROWS_AS((void)ks_two_sample(lo, std::vector<double>{}), DataError);
}

TEST_CASE("KS is invariant under monotone transforms and symmetric") {
  Rng rng(21);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a, b, fa, fb;
    for (int i = 0; i < 40; ++i) a.push_back(static_cast<double>(rng.below(96)));
    for (int i = 0; i < 55; ++i) b.push_back(static_cast<double>(rng.below(96)));
    for (double x : a) fa.push_back(std::exp(x / 20.0) + 3.0);
    for (double x : b) fb.push_back(std::exp(x / 20.0) + 3.0);
    const auto r = ks_two_sample(a, b);
    CHECK(ks_two_sample(fa, fb).statistic == doctest::Approx(r.statistic));
    CHECK(ks_two_sample(b, a).statistic == doctest::Approx(r.statistic));
    CHECK(r.p_value >= 0.0);
    CHECK(r.p_value <= 1.0);
  }
}

TEST_CASE("Kolmogorov survival function") {
  CHECK(kolmogorov_survival(0.0) == 1.0);
  // Reference values of the Kolmogorov distribution.
  CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.0494).epsilon(0.01));
  CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.2700).epsilon(0.01));
  // Both series agree near the switch point.
  CHECK(kolmogorov_survival(1.1799) == doctest::Approx(kolmogorov_survival(1.1801)).epsilon(1e-3));
}

TEST_CASE("JSD and BD against direct summation") {
  const std::vector<double> p{0.5, 0.5}, q{0.25, 0.75};
  const CategoricalDistribution P(p), Q(q);
  CHECK(std::abs(jsd(P, Q) - 0.0488) < 1e-4);
  CHECK(std::abs(bhattacharyya_distance(P, Q) - 0.0347) < 1e-4);
  CHECK(jsd(P, Q) == doctest::Approx(jsd_oracle(p, q)));
  CHECK(bhattacharyya_distance(P, Q) == doctest::Approx(bd_oracle(p, q)));
}

TEST_CASE("JSD/BD symmetry, bounds and identity") {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(18), b(18);
    for (auto& x : a) x = static_cast<double>(rng.below(10));
    for (auto& x : b) x = static_cast<double>(rng.below(10));
    a[0] += 1;
    b[1] += 1;
    const auto P = CategoricalDistribution::from_counts(a);
    const auto Q = CategoricalDistribution::from_counts(b);
    CHECK(jsd(P, Q) == doctest::Approx(jsd(Q, P)));
    CHECK(bhattacharyya_distance(P, Q) == doctest::Approx(bhattacharyya_distance(Q, P)));
    CHECK(jsd(P, Q) >= 0.0);
    CHECK(jsd(P, Q) <= 1.0);
    CHECK(bhattacharyya_distance(P, Q) >= 0.0);
    CHECK(jsd(P, P) == 0.0);
    CHECK(bhattacharyya_distance(P, P) == 0.0);
    CHECK(jsd(P, Q) == doctest::Approx(jsd_oracle(P.probabilities(), Q.probabilities())));
  }
  CHECK(jsd(CategoricalDistribution({1.0, 0.0}), CategoricalDistribution({0.0, 1.0})) == doctest::Approx(1.0));
  CHECK_THROWS_AS(CategoricalDistribution({0.5, 0.6}), DataError);
  CHECK_THROWS_AS(CategoricalDistribution({-0.5, 1.5}), DataError);
  CHECK_THROWS_AS((void)CategoricalDistribution::from_counts(std::vector<double>{0, 0}), DataError);
}

TEST_CASE("BLEU equals the brute-force oracle on short sequences") {
  Rng rng(33);
  for (int t = 0; t < 500; ++t) {
    std::vector<TokenSequence> refs, cands;
    const auto pairs = 1 + rng.below(3);
    for (std::uint64_t s = 0; s < pairs; ++s) {
      refs.push_back(testing::random_tokens(rng, 20, 3));
      cands.push_back(testing::random_tokens(rng, 20, 3));
    }
    CHECK(bleu(refs, cands) == doctest::Approx(bleu_oracle(refs, cands, 4)).epsilon(1e-12));
  }
}

TEST_CASE("BLEU identity and edge cases") {
  const std::vector<TokenSequence> ref{{"a", "b", "c", "d", "e"}};
  CHECK(bleu(ref, ref) == doctest::Approx(1.0));
  CHECK(bleu(ref, std::vector<TokenSequence>{{"x", "y", "z", "w"}}) == 0.0);
  // Only unigrams and bigrams exist in a two-token candidate.
  const std::vector<TokenSequence> short_cand{{"a", "b"}};
  CHECK(bleu(ref, short_cand) == doctest::Approx(std::exp(1.0 - 5.0 / 2.0)));
  CHECK_THROWS_AS((void)bleu(ref, std::vector<TokenSequence>{}), DataError);
}

TEST_CASE("intent_histogram and fidelity_report on a copy") {
  SimConfig cfg;
  cfg.seed = 6;
  const auto d = simulate_population(sample_profiles(6, 2, cfg), cfg);
  const auto h = intent_histogram(d.sequences, d.vocabularies);
  CHECK(h.support_size() == static_cast<std::size_t>(d.vocabularies.intent_count()));

  auto synth = d;
  for (auto& s : synth.sequences) s.provenance = Provenance::synthetic;
  std::vector<GenerationRecord> records(4);
  for (auto& r : records) r.first_attempt_valid = true;
  const auto rep = fidelity_report(d, synth, records);
  CHECK(rep.ks_statistic == 0.0);
  CHECK(rep.ks_p == 1.0);
  CHECK(rep.bleu == doctest::Approx(1.0));
  CHECK(rep.bd == 0.0);
  CHECK(rep.jsd == 0.0);
  CHECK(rep.pass1 == 1.0);
  CHECK(rep.bleu_pairs == 6);
  CHECK(std::isnan(fidelity_report(d, synth, {}).pass1));
}
