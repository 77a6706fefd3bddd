#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "behsynth/core.hpp"

namespace behsynth {

/// Chronological split fractions plus the population/individual user count.
struct SplitSpec {
  double train_fraction = 0.7;
  double valid_fraction = 0.1;
  double test_fraction = 0.2;
  std::size_t population_user_count = 0;

  /// Throws ConfigError unless fractions lie in (0,1) and sum to 1 (1e-9).
  void check_fractions() const;
};

struct WeekSegment {
  int week_index = 0;
  std::vector<BehaviorEvent> events;
};

// ---------------------------------------------------------------------------
// File formats
//
// Event file (CSV, UTF-8, LF):
//   user_id,week,weekday,timeslot,location,intent
//   u0001,0,3,48,2,5
//
// Profile sidecar `<events>.profiles.json`:
//   {"split_tag": "unsplit",
//    "users": [{"user_id": "u0001", "provenance": "real",
//               "profile": {"age_group": {"code": "...", "label": "..."}, ...}}]}
//
// Vocabulary sidecar `<events>.vocab.json`:
//   {"locations": [...], "intents": [...],
//    "profile_tables": {"occupation": [{"code": "...", "label": "..."}], ...}}
// ---------------------------------------------------------------------------

inline constexpr std::string_view kEventsCsvFormat = "events-csv";
inline constexpr std::string_view kEventsHeader = "user_id,week,weekday,timeslot,location,intent";

[[nodiscard]] std::filesystem::path profiles_sidecar_path(const std::filesystem::path& events);
[[nodiscard]] std::filesystem::path vocab_sidecar_path(const std::filesystem::path& events);

struct LoadOptions {
  /// Any invalid record aborts the load with a line-numbered DataError.
  bool strict = true;
  /// Explicit sidecar locations; defaults follow the `<events>.*.json` naming.
  std::optional<std::filesystem::path> profiles_path;
  std::optional<std::filesystem::path> vocab_path;
};

struct LoadResult {
  Dataset dataset;
  /// Skipped records (non-strict mode) and dropped duplicate timestamps.
  std::vector<std::string> diagnostics;
  bool vocab_inferred = false;
};

LoadResult load_dataset(const std::filesystem::path& path,
                        std::string_view format_id = kEventsCsvFormat,
                        const LoadOptions& options = {});

/// Writes the event file and both sidecars.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Vocabulary inferred from data: N_L/N_B = max id + 1, generic labels,
/// profile tables from the observed codes.
[[nodiscard]] Vocabularies infer_vocabularies(const std::vector<BehaviorSequence>& sequences);

/// Seeded user-level partition into (population, individual).
std::pair<Dataset, Dataset> split_population_individual(const Dataset& dataset,
                                                        const SplitSpec& spec,
                                                        std::uint64_t seed);

struct ChronologicalSplit {
  BehaviorSequence train;
  BehaviorSequence valid;
  BehaviorSequence test;
};

inline constexpr std::size_t kMinSplitLength = 10;

/// valid and test receive floor(n * fraction) events; the remainder goes to
/// train. Order is preserved: train is the prefix, test the suffix.
ChronologicalSplit split_chronological(const BehaviorSequence& sequence, const SplitSpec& spec);

/// One segment per distinct week_index, in order; never emits empty segments.
[[nodiscard]] std::vector<WeekSegment> segment_weekly(const BehaviorSequence& sequence);

/// Events of the first `days` distinct (week, weekday) days of the sequence,
/// labelled with the week of the first event.
[[nodiscard]] WeekSegment seed_window(const BehaviorSequence& sequence, int days);

}  // namespace behsynth
