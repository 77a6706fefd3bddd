#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "behsynth/classifiers.hpp"
#include "behsynth/core.hpp"
#include "behsynth/fidelity.hpp"
#include "behsynth/random.hpp"
#include "behsynth/simgen.hpp"

namespace testing {

using namespace behsynth;

inline Vocabularies small_vocab(int locations = 10, int intents = 18) {
  Vocabularies v;
  for (int i = 0; i < locations; ++i) v.locations.push_back("loc" + std::to_string(i));
  for (int i = 0; i < intents; ++i) v.intents.push_back("intent" + std::to_string(i));
  v.profile_tables["occupation"] = {{"student", "Student"}, {"office_worker", "Office worker"}};
  return v;
}

inline UserProfile profile_for(const std::string& occupation) {
  UserProfile p;
  p.age_group = {"25_34", "25-34"};
  p.education = {"bachelor", "Bachelor"};
  p.gender = {"female", "Female"};
  p.consumption_level = {"medium", "Medium"};
  p.occupation = {occupation, occupation};
  return p;
}

inline BehaviorSequence make_sequence(std::string id, std::vector<BehaviorEvent> events) {
  BehaviorSequence s;
  s.user_id = std::move(id);
  s.profile = profile_for("student");
  s.events = std::move(events);
  return s;
}

/// Random valid sorted tie-free sequence.
inline BehaviorSequence random_sequence(Rng& rng, const std::string& id, std::size_t max_events,
                                        int weeks, const Vocabularies& v) {
  std::vector<BehaviorEvent> events;
  const auto n = 1 + rng.below(max_events);
  for (std::uint64_t i = 0; i < n; ++i) {
    events.push_back({static_cast<int>(rng.below(static_cast<std::uint64_t>(weeks))),
                      static_cast<int>(rng.below(7)), static_cast<int>(rng.below(96)),
                      static_cast<int>(rng.below(static_cast<std::uint64_t>(v.location_count()))),
                      static_cast<int>(rng.below(static_cast<std::uint64_t>(v.intent_count())))});
  }
  return sort_and_dedupe(make_sequence(id, std::move(events))).sequence;
}

/// Up to `max_len` one-letter tokens over the first `alphabet` letters.
inline TokenSequence random_tokens(Rng& rng, std::size_t max_len, int alphabet) {
  TokenSequence t;
  const auto n = rng.below(max_len + 1);
  for (std::uint64_t i = 0; i < n; ++i) {
    t.emplace_back(1, static_cast<char>('a' + rng.below(static_cast<std::uint64_t>(alphabet))));
  }
  return t;
}

/// Three features uniform in centre +- spread/2.
inline std::vector<FeatureRow> draw_rows(Rng& rng, std::size_t n, double centre, double spread) {
  std::vector<FeatureRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    rows.push_back({centre + spread * (rng.uniform01() - 0.5), centre + spread * (rng.uniform01() - 0.5),
                    centre + spread * (rng.uniform01() - 0.5)});
  }
  return rows;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("behsynth_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
