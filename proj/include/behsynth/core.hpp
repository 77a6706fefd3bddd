#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "behsynth/errors.hpp"

namespace behsynth {

inline constexpr int kWeekdayCount = 7;
inline constexpr int kTimeslotCount = 96;  // 15-minute slots

/// One timestamped activity record of a user.
struct BehaviorEvent {
  int week_index = 0;
  int weekday = 0;
  int timeslot = 0;
  int location_id = 0;
  int intent_id = 0;

  /// Ordering key; at most one event per key within a sequence.
  [[nodiscard]] std::tuple<int, int, int> time_key() const {
    return {week_index, weekday, timeslot};
  }

  friend bool operator==(const BehaviorEvent&, const BehaviorEvent&) = default;
};

struct CodedLabel {
  std::string code;
  std::string label;

  friend bool operator==(const CodedLabel&, const CodedLabel&) = default;
};

/// The five categorical attributes that condition generation.
struct UserProfile {
  CodedLabel age_group;
  CodedLabel education;
  CodedLabel gender;
  CodedLabel consumption_level;
  CodedLabel occupation;

  static constexpr std::array<std::string_view, 5> kAttributeNames = {
      "age_group", "education", "gender", "consumption_level", "occupation"};

  [[nodiscard]] const CodedLabel& attribute(std::size_t index) const;
  CodedLabel& attribute(std::size_t index);

  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

/// Label tables for every categorical axis. Weekday and timeslot spaces are
/// fixed at 7 and 96; location and intent spaces are dense [0, N).
struct Vocabularies {
  std::vector<std::string> locations;
  std::vector<std::string> intents;
  /// attribute name -> allowed codes with labels.
  std::map<std::string, std::vector<CodedLabel>> profile_tables;

  [[nodiscard]] int location_count() const { return static_cast<int>(locations.size()); }
  [[nodiscard]] int intent_count() const { return static_cast<int>(intents.size()); }

  /// Throws DataError when a structural invariant is broken.
  void check() const;

  /// Same location and intent spaces (profile tables may differ).
  [[nodiscard]] bool same_event_space(const Vocabularies& other) const;

  friend bool operator==(const Vocabularies&, const Vocabularies&) = default;
};

enum class Provenance { real, synthetic, mixed };
enum class SplitTag { population, individual, unsplit };

[[nodiscard]] std::string_view to_string(Provenance p);
[[nodiscard]] std::string_view to_string(SplitTag t);
[[nodiscard]] Provenance parse_provenance(std::string_view text);
[[nodiscard]] SplitTag parse_split_tag(std::string_view text);

struct BehaviorSequence {
  std::string user_id;
  UserProfile profile;
  std::vector<BehaviorEvent> events;
  Provenance provenance = Provenance::real;

  friend bool operator==(const BehaviorSequence&, const BehaviorSequence&) = default;
};

struct Dataset {
  Vocabularies vocabularies;
  std::vector<BehaviorSequence> sequences;
  SplitTag split_tag = SplitTag::unsplit;

  [[nodiscard]] const BehaviorSequence* find(std::string_view user_id) const;
  [[nodiscard]] std::size_t event_count() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Violation categories shared by event validation and output parsing.
enum class ViolationKind {
  field_count,
  non_integer,
  weekday_range,
  timeslot_range,
  unknown_location,
  unknown_intent,
  negative_week,
};

[[nodiscard]] std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string message;
};

/// Empty result means the event is valid.
[[nodiscard]] std::vector<Violation> validate_event(const BehaviorEvent& event,
                                                    const Vocabularies& vocab);

/// Empty result means the profile is complete and every code is known.
/// Attributes without a vocabulary table are only checked for presence.
[[nodiscard]] std::vector<std::string> validate_profile(const UserProfile& profile,
                                                        const Vocabularies& vocab);

struct DedupeResult {
  BehaviorSequence sequence;
  std::size_t dropped = 0;
};

/// Stable sort by time key; later events sharing a key with an earlier one
/// are dropped.
[[nodiscard]] DedupeResult sort_and_dedupe(BehaviorSequence sequence);

/// Full-scan consistency check: unique user ids, sorted tie-free timelines,
/// every event valid. Returns human-readable problems, empty when valid.
[[nodiscard]] std::vector<std::string> validate_dataset(const Dataset& dataset);

}  // namespace behsynth
