#include "behsynth/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include <fmt/core.h>

#include "behsynth/random.hpp"

namespace behsynth {

namespace {

using TimeKey = std::tuple<int, int, int>;

std::map<TimeKey, int> location_timeline(const BehaviorSequence& seq) {
  std::map<TimeKey, int> out;
  for (const auto& e : seq.events) out.emplace(e.time_key(), e.location_id);
  return out;
}

double overlap_against(const BehaviorSequence& generated, const std::map<TimeKey, int>& timeline) {
  if (generated.events.empty()) {
    throw DataError(fmt::format("overlap_ratio: generated sequence '{}' is empty", generated.user_id));
  }
  std::size_t matches = 0;
  for (const auto& e : generated.events) {
    auto it = timeline.find(e.time_key());
    if (it != timeline.end() && it->second == e.location_id) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(generated.events.size());
}

double mean_of_top(const std::vector<double>& ranked, std::size_t k) {
  const std::size_t n = std::min(k, ranked.size());
  if (n == 0) return 0.0;
  return std::accumulate(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n), 0.0) /
         static_cast<double>(n);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

double overlap_ratio(const BehaviorSequence& generated, const BehaviorSequence& real) {
  return overlap_against(generated, location_timeline(real));
}

std::vector<double> ranked_overlaps(const BehaviorSequence& generated,
                                    std::span<const BehaviorSequence> reals) {
  std::vector<double> out;
  out.reserve(reals.size());
  for (const auto& r : reals) out.push_back(overlap_ratio(generated, r));
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> values) {
  std::vector<CdfPoint> out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.push_back({values[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

double UniquenessReport::mean_top_k(int k) const {
  if (profiles.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : profiles) sum += mean_of_top(p.top_k_ratios, static_cast<std::size_t>(k));
  return sum / static_cast<double>(profiles.size());
}

double UniquenessReport::fraction_top1_below(double t) const {
  if (profiles.empty()) return 0.0;
  const auto below = std::count_if(profiles.begin(), profiles.end(), [t](const OverlapProfile& p) {
    return !p.top_k_ratios.empty() && p.top_k_ratios.front() < t;
  });
  return static_cast<double>(below) / static_cast<double>(profiles.size());
}

UniquenessReport uniqueness_audit(std::span<const BehaviorSequence> synth,
                                  std::span<const BehaviorSequence> real, std::vector<int> k_list,
                                  double threshold) {
  if (synth.empty() || real.empty()) throw DataError("uniqueness_audit: empty dataset");
  if (k_list.empty()) k_list = {1, 3, 5};
  for (int k : k_list) {
    if (k < 1) throw ConfigError("uniqueness k must be >= 1");
  }
  const auto max_k = static_cast<std::size_t>(*std::max_element(k_list.begin(), k_list.end()));

  std::vector<std::map<TimeKey, int>> timelines;
  timelines.reserve(real.size());
  for (const auto& r : real) timelines.push_back(location_timeline(r));

  UniquenessReport report;
  report.k_list = std::move(k_list);
  report.threshold = threshold;
  std::vector<double> top1;
  for (const auto& s : synth) {
    std::vector<double> ratios;
    ratios.reserve(timelines.size());
    for (const auto& t : timelines) ratios.push_back(overlap_against(s, t));
    std::sort(ratios.begin(), ratios.end(), std::greater<>());
    ratios.resize(std::min(max_k, ratios.size()));
    top1.push_back(ratios.front());
    report.profiles.push_back({s.user_id, std::move(ratios)});
  }
  report.top1_cdf = empirical_cdf(top1);
  report.fraction_below = report.fraction_top1_below(threshold);
  return report;
}

std::vector<double> mia_features(std::span<const BehaviorSequence> runs,
                                 std::span<const BehaviorSequence> real_set) {
  if (runs.empty()) throw DataError("mia_features: no generation runs");
  if (real_set.empty()) throw DataError("mia_features: empty real set");
  std::vector<double> out;
  out.reserve(runs.size() * 3);
  for (const auto& run : runs) {
    const auto ranked = ranked_overlaps(run, real_set);
    out.push_back(ranked.front());
    out.push_back(mean_of_top(ranked, 3));
    out.push_back(mean_of_top(ranked, 5));
  }
  return out;
}

MiaResult mia_attack(std::span<const FeatureRow> members, std::span<const FeatureRow> nonmembers,
                     ClassifierId classifier, std::uint64_t seed) {
  if (members.size() < kMinMiaClassSize || nonmembers.size() < kMinMiaClassSize) {
    throw DataError(fmt::format("mia_attack: need >= {} samples per class (have {} / {})",
                                kMinMiaClassSize, members.size(), nonmembers.size()));
  }
  Rng rng(derive_seed(seed, {0x1A1A}));
  std::vector<FeatureRow> train_x, test_x;
  std::vector<int> train_y, test_y;
  auto split = [&](std::span<const FeatureRow> rows, int label) {
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const std::size_t half = rows.size() / 2;
    for (std::size_t i = 0; i < order.size(); ++i) {
      auto& xs = i < half ? train_x : test_x;
      auto& ys = i < half ? train_y : test_y;
      xs.push_back(rows[order[i]]);
      ys.push_back(label);
    }
  };
  split(members, 1);
  split(nonmembers, 0);

  auto model = make_classifier(classifier, derive_seed(seed, {0xC1A55}));
  model->fit(train_x, train_y);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test_x.size(); ++i) correct += model->predict(test_x[i]) == test_y[i] ? 1 : 0;
  return {classifier, static_cast<double>(correct) / static_cast<double>(test_x.size()), seed,
          train_x.size(), test_x.size()};
}

Gaussian fit_gaussian(std::span<const double> samples) {
  if (samples.size() < 2) throw DataError("fit_gaussian: need at least 2 samples");
  const double n = static_cast<double>(samples.size());
  const double mu = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mu) * (x - mu);
  return {mu, std::max(std::sqrt(ss / (n - 1.0)), kSigmaFloor)};
}

double gaussian_mechanism_delta(double sensitivity, double sigma, double epsilon) {
  const double a = sensitivity / (2.0 * sigma);
  const double b = epsilon * sigma / sensitivity;
  // e^eps * Phi(x) evaluated in log space so large eps cannot overflow.
  const double tail = normal_cdf(-a - b);
  const double scaled = tail > 0.0 ? std::exp(epsilon + std::log(tail)) : 0.0;
  return normal_cdf(a - b) - scaled;
}

double epsilon_estimate(const Gaussian& member, const Gaussian& nonmember, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
  const double sensitivity = std::abs(member.mu - nonmember.mu);
  if (sensitivity == 0.0) return 0.0;
  const double sigma = std::max(
      std::sqrt(0.5 * (member.sigma * member.sigma + nonmember.sigma * nonmember.sigma)), kSigmaFloor);
  if (gaussian_mechanism_delta(sensitivity, sigma, 0.0) <= delta) return 0.0;
  if (gaussian_mechanism_delta(sensitivity, sigma, kEpsilonCap) > delta) return kEpsilonCap;
  double lo = 0.0;
  double hi = kEpsilonCap;
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (gaussian_mechanism_delta(sensitivity, sigma, mid) <= delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

UserOverlapSamples membership_overlap_samples(std::span<const BehaviorSequence> runs,
                                              const std::string& user_id,
                                              std::span<const BehaviorSequence> real_set) {
  std::vector<BehaviorSequence> without;
  for (const auto& r : real_set) {
    if (r.user_id != user_id) without.push_back(r);
  }
  if (without.size() == real_set.size()) {
    throw DataError(fmt::format("user '{}' is not part of the real set", user_id));
  }
  UserOverlapSamples out{user_id, {}, {}};
  for (const auto& run : runs) {
    out.member.push_back(ranked_overlaps(run, real_set).front());
    out.nonmember.push_back(without.empty() ? 0.0 : ranked_overlaps(run, without).front());
  }
  return out;
}

EpsilonReport epsilon_audit(std::span<const UserOverlapSamples> users, double delta) {
  if (users.empty()) throw DataError("epsilon_audit: no users");
  EpsilonReport report;
  report.delta = delta;
  std::vector<double> eps;
  for (const auto& u : users) {
    const double e = epsilon_estimate(fit_gaussian(u.member), fit_gaussian(u.nonmember), delta);
    report.per_user_epsilon.emplace_back(u.user_id, e);
    eps.push_back(e);
  }
  report.cdf_points = empirical_cdf(eps);
  report.epsilon_at_cdf_90 = report.cdf_points.back().value;
  for (const auto& p : report.cdf_points) {
    if (p.cumulative >= 0.9 - 1e-12) {
      report.epsilon_at_cdf_90 = p.value;
      break;
    }
  }
  report.below_4_at_cdf_90 = report.epsilon_at_cdf_90 < 4.0;
  return report;
}

}  // namespace behsynth
