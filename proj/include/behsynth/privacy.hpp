#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "behsynth/classifiers.hpp"
#include "behsynth/core.hpp"

namespace behsynth {

// ---------------------------------------------------------------------------
// Uniqueness testing
// ---------------------------------------------------------------------------

/// Fraction of `generated` events whose (week, weekday, timeslot) also occurs
/// in `real` with the same location. Throws DataError for an empty generated
/// sequence.
[[nodiscard]] double overlap_ratio(const BehaviorSequence& generated, const BehaviorSequence& real);

/// Overlap of `generated` against every real sequence, sorted descending.
[[nodiscard]] std::vector<double> ranked_overlaps(const BehaviorSequence& generated,
                                                  std::span<const BehaviorSequence> reals);

struct OverlapProfile {
  std::string gen_user_id;
  std::vector<double> top_k_ratios;  ///< descending, length min(max k, #real)
};

struct CdfPoint {
  double value = 0.0;
  double cumulative = 0.0;
};

/// Empirical CDF at each distinct value; ends at cumulative 1.
[[nodiscard]] std::vector<CdfPoint> empirical_cdf(std::vector<double> values);

struct UniquenessReport {
  std::vector<int> k_list;
  std::vector<OverlapProfile> profiles;
  std::vector<CdfPoint> top1_cdf;
  double threshold = 0.3;
  double fraction_below = 0.0;  ///< share of generated sequences whose top-1 < threshold

  /// Mean of the top-k ratios per generated sequence, averaged over sequences.
  [[nodiscard]] double mean_top_k(int k) const;
  [[nodiscard]] double fraction_top1_below(double threshold) const;
};

[[nodiscard]] UniquenessReport uniqueness_audit(std::span<const BehaviorSequence> synth,
                                                std::span<const BehaviorSequence> real,
                                                std::vector<int> k_list, double threshold);

// ---------------------------------------------------------------------------
// Membership inference
// ---------------------------------------------------------------------------

/// Per run: top-1, mean top-3, mean top-5 overlap against `real_set`
/// (means over however many real sequences exist, up to k).
[[nodiscard]] std::vector<double> mia_features(std::span<const BehaviorSequence> runs,
                                               std::span<const BehaviorSequence> real_set);

struct MiaResult {
  ClassifierId classifier = ClassifierId::lr;
  double success_rate = 0.0;
  std::uint64_t split_seed = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

inline constexpr std::size_t kMinMiaClassSize = 10;

/// Stratified 50/50 split (seeded), classifier trained from scratch,
/// success rate = test accuracy.
[[nodiscard]] MiaResult mia_attack(std::span<const FeatureRow> members,
                                   std::span<const FeatureRow> nonmembers, ClassifierId classifier,
                                   std::uint64_t seed);

// ---------------------------------------------------------------------------
// Differential-privacy budget
// ---------------------------------------------------------------------------

struct Gaussian {
  double mu = 0.0;
  double sigma = 1.0;
};

inline constexpr double kSigmaFloor = 1e-6;

/// Sample mean and unbiased standard deviation (floored at 1e-6).
[[nodiscard]] Gaussian fit_gaussian(std::span<const double> samples);

/// Privacy loss of the Gaussian-mechanism pair N(mu_in, s), N(mu_out, s):
/// delta(eps) = Phi(D/(2s) - eps s/D) - e^eps Phi(-D/(2s) - eps s/D).
[[nodiscard]] double gaussian_mechanism_delta(double sensitivity, double sigma, double epsilon);

inline constexpr double kEpsilonCap = 64.0;

/// Smallest eps in [0, 64] with delta(eps) <= delta; sensitivity is
/// |mu_in - mu_out| and sigma the pooled deviation sqrt((s_in^2 + s_out^2)/2).
[[nodiscard]] double epsilon_estimate(const Gaussian& member, const Gaussian& nonmember,
                                      double delta);

struct UserOverlapSamples {
  std::string user_id;
  std::vector<double> member;     ///< overlaps with the user in the real set
  std::vector<double> nonmember;  ///< overlaps with the user held out
};

/// Member/nonmember top-1 overlap samples for one user across generation runs.
[[nodiscard]] UserOverlapSamples membership_overlap_samples(std::span<const BehaviorSequence> runs,
                                                            const std::string& user_id,
                                                            std::span<const BehaviorSequence> real_set);

struct EpsilonReport {
  double delta = 1e-5;
  std::vector<std::pair<std::string, double>> per_user_epsilon;
  std::vector<CdfPoint> cdf_points;
  double epsilon_at_cdf_90 = 0.0;
  bool below_4_at_cdf_90 = true;
};

[[nodiscard]] EpsilonReport epsilon_audit(std::span<const UserOverlapSamples> users, double delta);

struct PrivacyReport {
  UniquenessReport uniqueness;
  std::vector<MiaResult> mia;
  std::size_t mia_members = 0;
  std::size_t mia_nonmembers = 0;
  int runs = 0;
  EpsilonReport epsilon;
};

}  // namespace behsynth
