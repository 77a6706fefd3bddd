#include "behsynth/core.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include <fmt/core.h>

namespace behsynth {

const CodedLabel& UserProfile::attribute(std::size_t index) const {
  switch (index) {
    case 0: return age_group;
    case 1: return education;
    case 2: return gender;
    case 3: return consumption_level;
    case 4: return occupation;
    default: throw std::out_of_range("profile attribute index");
  }
}

CodedLabel& UserProfile::attribute(std::size_t index) {
  return const_cast<CodedLabel&>(std::as_const(*this).attribute(index));
}

void Vocabularies::check() const {
  if (locations.empty()) throw DataError("vocabulary has no locations");
  if (intents.empty()) throw DataError("vocabulary has no intents");
  std::set<std::string> seen;
  for (const auto& label : intents) {
    if (!seen.insert(label).second) {
      throw DataError(fmt::format("duplicate intent label '{}'", label));
    }
  }
  for (const auto& [name, table] : profile_tables) {
    std::set<std::string> codes;
    for (const auto& entry : table) {
      if (!codes.insert(entry.code).second) {
        throw DataError(fmt::format("duplicate code '{}' in profile table '{}'", entry.code, name));
      }
    }
  }
}

bool Vocabularies::same_event_space(const Vocabularies& other) const {
  return locations == other.locations && intents == other.intents;
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::real: return "real";
    case Provenance::synthetic: return "synthetic";
    case Provenance::mixed: return "mixed";
  }
  return "real";
}

std::string_view to_string(SplitTag t) {
  switch (t) {
    case SplitTag::population: return "population";
    case SplitTag::individual: return "individual";
    case SplitTag::unsplit: return "unsplit";
  }
  return "unsplit";
}

Provenance parse_provenance(std::string_view text) {
  if (text == "real") return Provenance::real;
  if (text == "synthetic") return Provenance::synthetic;
  if (text == "mixed") return Provenance::mixed;
  throw DataError(fmt::format("unknown provenance '{}'", text));
}

SplitTag parse_split_tag(std::string_view text) {
  if (text == "population") return SplitTag::population;
  if (text == "individual") return SplitTag::individual;
  if (text == "unsplit") return SplitTag::unsplit;
  throw DataError(fmt::format("unknown split tag '{}'", text));
}

const BehaviorSequence* Dataset::find(std::string_view user_id) const {
  for (const auto& seq : sequences) {
    if (seq.user_id == user_id) return &seq;
  }
  return nullptr;
}

std::size_t Dataset::event_count() const {
  std::size_t total = 0;
  for (const auto& seq : sequences) total += seq.events.size();
  return total;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::field_count: return "field_count";
    case ViolationKind::non_integer: return "non_integer";
    case ViolationKind::weekday_range: return "weekday_range";
    case ViolationKind::timeslot_range: return "timeslot_range";
    case ViolationKind::unknown_location: return "unknown_location";
    case ViolationKind::unknown_intent: return "unknown_intent";
    case ViolationKind::negative_week: return "negative_week";
  }
  return "unknown";
}

std::vector<Violation> validate_event(const BehaviorEvent& event, const Vocabularies& vocab) {
  std::vector<Violation> out;
  if (event.weekday < 0 || event.weekday >= kWeekdayCount) {
    out.push_back({ViolationKind::weekday_range,
                   fmt::format("weekday out of [0,6]: {}", event.weekday)});
  }
  if (event.timeslot < 0 || event.timeslot >= kTimeslotCount) {
    out.push_back({ViolationKind::timeslot_range,
                   fmt::format("timeslot out of [0,95]: {}", event.timeslot)});
  }
  if (event.location_id < 0 || event.location_id >= vocab.location_count()) {
    out.push_back({ViolationKind::unknown_location,
                   fmt::format("location out of [0,{}): {}", vocab.location_count(),
                               event.location_id)});
  }
  if (event.intent_id < 0 || event.intent_id >= vocab.intent_count()) {
    out.push_back({ViolationKind::unknown_intent,
                   fmt::format("intent out of [0,{}): {}", vocab.intent_count(), event.intent_id)});
  }
  if (event.week_index < 0) {
    out.push_back({ViolationKind::negative_week,
                   fmt::format("week index negative: {}", event.week_index)});
  }
  return out;
}

std::vector<std::string> validate_profile(const UserProfile& profile, const Vocabularies& vocab) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < UserProfile::kAttributeNames.size(); ++i) {
    const std::string name(UserProfile::kAttributeNames[i]);
    const auto& value = profile.attribute(i);
    if (value.code.empty()) {
      out.push_back(fmt::format("profile attribute '{}' missing", name));
      continue;
    }
    auto table = vocab.profile_tables.find(name);
    if (table == vocab.profile_tables.end()) continue;
    const bool known = std::any_of(table->second.begin(), table->second.end(),
                                   [&](const CodedLabel& e) { return e.code == value.code; });
    if (!known) {
      out.push_back(fmt::format("profile attribute '{}' has unknown code '{}'", name, value.code));
    }
  }
  return out;
}

DedupeResult sort_and_dedupe(BehaviorSequence sequence) {
  auto& events = sequence.events;
  std::stable_sort(events.begin(), events.end(),
                   [](const BehaviorEvent& a, const BehaviorEvent& b) {
                     return a.time_key() < b.time_key();
                   });
  auto last = std::unique(events.begin(), events.end(),
                          [](const BehaviorEvent& a, const BehaviorEvent& b) {
                            return a.time_key() == b.time_key();
                          });
  const auto dropped = static_cast<std::size_t>(events.end() - last);
  events.erase(last, events.end());
  return {std::move(sequence), dropped};
}

std::vector<std::string> validate_dataset(const Dataset& dataset) {
  std::vector<std::string> problems;
  try {
    dataset.vocabularies.check();
  } catch (const DataError& e) {
    problems.emplace_back(e.what());
  }
  std::set<std::string> ids;
  for (const auto& seq : dataset.sequences) {
    if (!ids.insert(seq.user_id).second) {
      problems.push_back(fmt::format("duplicate user id '{}'", seq.user_id));
    }
    for (const auto& p : validate_profile(seq.profile, dataset.vocabularies)) {
      problems.push_back(fmt::format("user '{}': {}", seq.user_id, p));
    }
    for (std::size_t i = 0; i < seq.events.size(); ++i) {
      for (const auto& v : validate_event(seq.events[i], dataset.vocabularies)) {
        problems.push_back(fmt::format("user '{}' event {}: {}", seq.user_id, i, v.message));
      }
      if (i > 0 && !(seq.events[i - 1].time_key() < seq.events[i].time_key())) {
        problems.push_back(
            fmt::format("user '{}' event {}: not strictly after its predecessor", seq.user_id, i));
      }
    }
  }
  return problems;
}

}  // namespace behsynth
