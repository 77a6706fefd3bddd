#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "behsynth/core.hpp"

namespace behsynth {

/// Occupation-specific routine: a work window on work days where dominant
/// intents concentrate, and leisure intents elsewhere.
struct Archetype {
  std::string occupation;  ///< profile occupation code
  std::string label;
  int work_start_slot = 36;  ///< inclusive
  int work_end_slot = 72;    ///< exclusive
  std::vector<int> workdays;            ///< weekday indices, 0 = Monday
  std::vector<int> dominant_intents;    ///< first entry is the most frequent
  std::vector<int> leisure_intents;
  int work_location = 0;
};

struct SimConfig {
  std::uint64_t seed = 0;
  int weeks = 4;
  /// Absolute week index of the first simulated week; noise is keyed on the
  /// absolute index so a single-week run reproduces that week of a long run.
  int first_week = 0;
  /// Probability that a routine event is kept instead of replaced by a
  /// uniformly random intent/location.
  double routine_strength = 0.9;
  int events_per_day_min = 14;
  int events_per_day_max = 20;
  /// Non-zero values perturb the weekly template: every event moves by 1 to 3
  /// slots and a quarter of the intents are redrawn from the persona. The
  /// result keeps the user's habits while no timestamp repeats exactly.
  std::uint64_t template_shift = 0;
  std::vector<Archetype> archetypes;
  Vocabularies vocabularies;

  /// Defaults: bundled archetypes and vocabularies.
  SimConfig();

  void check() const;
  [[nodiscard]] const Archetype& archetype_for(const std::string& occupation) const;
};

[[nodiscard]] Vocabularies default_vocabularies();
[[nodiscard]] std::vector<Archetype> default_archetypes();

/// Archetype table file: {"archetypes": [{"occupation": ..., "label": ...,
/// "work_start_slot": ..., "work_end_slot": ..., "workdays": [...],
/// "dominant_intents": [...], "leisure_intents": [...], "work_location": ...}]}
[[nodiscard]] std::vector<Archetype> load_archetypes(const std::filesystem::path& path);

/// Deterministic in (profile, cfg). Throws ConfigError for an occupation
/// without an archetype.
[[nodiscard]] BehaviorSequence simulate_user(const UserProfile& profile, const SimConfig& cfg,
                                             std::string user_id = "user");

[[nodiscard]] std::string simulated_user_id(std::size_t ordinal);

/// User i is simulated with seed cfg.seed + i and id simulated_user_id(i).
[[nodiscard]] Dataset simulate_population(std::span<const UserProfile> profiles,
                                          const SimConfig& cfg);

/// Profiles with occupations cycling through the archetype table and the
/// remaining attributes drawn from the vocabulary tables.
[[nodiscard]] std::vector<UserProfile> sample_profiles(std::size_t count, std::uint64_t seed,
                                                       const SimConfig& cfg);

}  // namespace behsynth
