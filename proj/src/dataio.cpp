#include "behsynth/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <fmt/core.h>

#include "behsynth/json_io.hpp"
#include "behsynth/random.hpp"

namespace behsynth {

namespace fs = std::filesystem;

void SplitSpec::check_fractions() const {
  for (double f : {train_fraction, valid_fraction, test_fraction}) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError(fmt::format("split fraction {} not in (0,1)", f));
  }
  if (std::abs(train_fraction + valid_fraction + test_fraction - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

fs::path profiles_sidecar_path(const fs::path& events) {
  return fs::path(events.string() + ".profiles.json");
}

fs::path vocab_sidecar_path(const fs::path& events) {
  return fs::path(events.string() + ".vocab.json");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::optional<int> parse_int(std::string_view s) {
  int value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (s.empty() || ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

struct RawRecord {
  std::size_t line = 0;
  std::string user_id;
  BehaviorEvent event;
};

UserProfile unknown_profile() {
  UserProfile p;
  for (std::size_t i = 0; i < UserProfile::kAttributeNames.size(); ++i) {
    p.attribute(i) = {"unknown", "unknown"};
  }
  return p;
}

struct ProfileSidecar {
  SplitTag split_tag = SplitTag::unsplit;
  struct Entry {
    std::string user_id;
    Provenance provenance = Provenance::real;
    UserProfile profile;
  };
  std::vector<Entry> users;
};

ProfileSidecar read_profile_sidecar(const fs::path& path) {
  const Json j = read_json_file(path);
  ProfileSidecar out;
  if (!j.is_object() || !j.contains("users") || !j["users"].is_array()) {
    throw DataError(fmt::format("{}: expected an object with a 'users' array", path.string()));
  }
  if (j.contains("split_tag")) out.split_tag = parse_split_tag(j["split_tag"].get<std::string>());
  std::set<std::string> seen;
  for (const auto& u : j["users"]) {
    ProfileSidecar::Entry e;
    if (!u.contains("user_id") || !u["user_id"].is_string()) {
      throw DataError(fmt::format("{}: user entry without string 'user_id'", path.string()));
    }
    e.user_id = u["user_id"].get<std::string>();
    if (!seen.insert(e.user_id).second) {
      throw DataError(fmt::format("{}: duplicate user '{}'", path.string(), e.user_id));
    }
    if (u.contains("provenance")) e.provenance = parse_provenance(u["provenance"].get<std::string>());
    if (!u.contains("profile")) throw DataError(fmt::format("{}: user '{}' has no profile", path.string(), e.user_id));
    e.profile = profile_from_json(u["profile"]);
    out.users.push_back(std::move(e));
  }
  return out;
}

}  // namespace

Vocabularies infer_vocabularies(const std::vector<BehaviorSequence>& sequences) {
  int max_loc = -1;
  int max_intent = -1;
  std::map<std::string, std::map<std::string, std::string>> tables;
  for (const auto& seq : sequences) {
    for (const auto& e : seq.events) {
      max_loc = std::max(max_loc, e.location_id);
      max_intent = std::max(max_intent, e.intent_id);
    }
    for (std::size_t i = 0; i < UserProfile::kAttributeNames.size(); ++i) {
      const auto& attr = seq.profile.attribute(i);
      tables[std::string(UserProfile::kAttributeNames[i])].emplace(attr.code, attr.label);
    }
  }
  Vocabularies vocab;
  for (int i = 0; i <= max_loc; ++i) vocab.locations.push_back(fmt::format("location_{}", i));
  for (int i = 0; i <= max_intent; ++i) vocab.intents.push_back(fmt::format("intent_{}", i));
  if (vocab.locations.empty()) vocab.locations.emplace_back("location_0");
  if (vocab.intents.empty()) vocab.intents.emplace_back("intent_0");
  for (const auto& [name, codes] : tables) {
    auto& table = vocab.profile_tables[name];
    for (const auto& [code, label] : codes) table.push_back({code, label});
  }
  return vocab;
}

LoadResult load_dataset(const fs::path& path, std::string_view format_id, const LoadOptions& options) {
  if (format_id != kEventsCsvFormat) {
    throw ConfigError(fmt::format("unsupported dataset format '{}'", format_id));
  }
  const std::string text = read_text_file(path);
  LoadResult result;

  std::vector<RawRecord> records;
  std::vector<std::string> order;
  std::set<std::string> known_users;
  std::istringstream stream(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  auto reject = [&](std::size_t n, const std::string& why) {
    auto msg = fmt::format("{}:{}: {}", path.string(), n, why);
    if (options.strict) throw DataError(msg);
    result.diagnostics.push_back(std::move(msg));
  };
  while (std::getline(stream, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty()) continue;
    if (!header_seen) {
      if (content != kEventsHeader) {
        throw DataError(fmt::format("{}:{}: malformed header, expected '{}'", path.string(), line_no,
                                    kEventsHeader));
      }
      header_seen = true;
      continue;
    }
    const auto fields = split_fields(content, ',');
    if (fields.size() != 6) {
      reject(line_no, fmt::format("expected 6 fields, found {}", fields.size()));
      continue;
    }
    if (fields[0].empty()) {
      reject(line_no, "empty user_id");
      continue;
    }
    std::array<int, 5> values{};
    bool ok = true;
    for (std::size_t i = 0; i < 5; ++i) {
      auto v = parse_int(fields[i + 1]);
      if (!v) {
        ok = false;
        break;
      }
      values[i] = *v;
    }
    if (!ok) {
      reject(line_no, "non-integer field");
      continue;
    }
    RawRecord r;
    r.line = line_no;
    r.user_id = std::string(fields[0]);
    r.event = {values[0], values[1], values[2], values[3], values[4]};
    if (known_users.insert(r.user_id).second) order.push_back(r.user_id);
    records.push_back(std::move(r));
  }
  if (!header_seen) throw DataError(fmt::format("{}: no sequences (empty file)", path.string()));

  const fs::path profiles_path = options.profiles_path.value_or(profiles_sidecar_path(path));
  const fs::path vocab_path = options.vocab_path.value_or(vocab_sidecar_path(path));

  std::optional<ProfileSidecar> sidecar;
  if (fs::exists(profiles_path)) sidecar = read_profile_sidecar(profiles_path);

  // Sequence skeletons: sidecar order first, then any event-only users.
  std::vector<BehaviorSequence> sequences;
  std::map<std::string, std::size_t> index;
  if (sidecar) {
    result.dataset.split_tag = sidecar->split_tag;
    for (const auto& e : sidecar->users) {
      index[e.user_id] = sequences.size();
      sequences.push_back({e.user_id, e.profile, {}, e.provenance});
    }
  }
  for (const auto& id : order) {
    if (index.count(id)) continue;
    if (sidecar) {
      const auto msg = fmt::format("{}: user '{}' has events but no profile", path.string(), id);
      if (options.strict) throw DataError(msg);
      result.diagnostics.push_back(msg);
    }
    index[id] = sequences.size();
    sequences.push_back({id, unknown_profile(), {}, Provenance::real});
  }

  // Range checks that do not depend on the vocabulary happen first so that
  // inference never widens the space from a bad row.
  std::vector<RawRecord> accepted;
  for (auto& r : records) {
    Vocabularies wide;
    wide.locations.assign(static_cast<std::size_t>(std::max(r.event.location_id + 1, 1)), "");
    wide.intents.assign(static_cast<std::size_t>(std::max(r.event.intent_id + 1, 1)), "");
    auto v = validate_event(r.event, wide);
    if (!v.empty()) {
      reject(r.line, v.front().message);
      continue;
    }
    accepted.push_back(std::move(r));
  }

  if (fs::exists(vocab_path)) {
    result.dataset.vocabularies = vocabularies_from_json(read_json_file(vocab_path));
  } else {
    std::vector<BehaviorSequence> probe = sequences;
    for (const auto& r : accepted) probe[index.at(r.user_id)].events.push_back(r.event);
    result.dataset.vocabularies = infer_vocabularies(probe);
    result.vocab_inferred = true;
  }
  const auto& vocab = result.dataset.vocabularies;

  for (const auto& r : accepted) {
    auto v = validate_event(r.event, vocab);
    if (!v.empty()) {
      reject(r.line, v.front().message);
      continue;
    }
    sequences[index.at(r.user_id)].events.push_back(r.event);
  }

  for (auto& seq : sequences) {
    // Without a profile sidecar every user carries the placeholder profile.
    const auto problems = sidecar ? validate_profile(seq.profile, vocab) : std::vector<std::string>{};
    for (const auto& problem : problems) {
      const auto msg = fmt::format("{}: user '{}': {}", path.string(), seq.user_id, problem);
      if (options.strict) throw DataError(msg);
      result.diagnostics.push_back(msg);
    }
    auto deduped = sort_and_dedupe(std::move(seq));
    seq = std::move(deduped.sequence);
    if (deduped.dropped > 0) {
      result.diagnostics.push_back(fmt::format("user '{}': dropped {} duplicate timestamp(s)",
                                               seq.user_id, deduped.dropped));
    }
  }
  if (sequences.empty()) throw DataError(fmt::format("{}: no sequences", path.string()));
  result.dataset.sequences = std::move(sequences);
  return result;
}

void save_dataset(const Dataset& dataset, const fs::path& path) {
  std::string csv;
  csv += kEventsHeader;
  csv += '\n';
  for (const auto& seq : dataset.sequences) {
    for (const auto& e : seq.events) {
      csv += fmt::format("{},{},{},{},{},{}\n", seq.user_id, e.week_index, e.weekday, e.timeslot,
                         e.location_id, e.intent_id);
    }
  }
  Json users = Json::array();
  for (const auto& seq : dataset.sequences) {
    users.push_back(Json{{"user_id", seq.user_id},
                         {"provenance", to_string(seq.provenance)},
                         {"profile", to_json(seq.profile)}});
  }
  const Json profiles{{"split_tag", to_string(dataset.split_tag)}, {"users", std::move(users)}};
  write_text_file(path, csv);
  write_text_file(profiles_sidecar_path(path), profiles.dump(2) + "\n");
  write_text_file(vocab_sidecar_path(path), to_json(dataset.vocabularies).dump(2) + "\n");
}

std::pair<Dataset, Dataset> split_population_individual(const Dataset& dataset,
                                                        const SplitSpec& spec,
                                                        std::uint64_t seed) {
  const std::size_t n = dataset.sequences.size();
  if (spec.population_user_count == 0 || spec.population_user_count >= n) {
    throw ConfigError(fmt::format("population_user_count {} must be in [1, {})",
                                  spec.population_user_count, n));
  }
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  Rng rng(derive_seed(seed, {0x5B11}));
  rng.shuffle(ids);
  std::vector<bool> in_population(n, false);
  for (std::size_t i = 0; i < spec.population_user_count; ++i) in_population[ids[i]] = true;

  Dataset population{dataset.vocabularies, {}, SplitTag::population};
  Dataset individual{dataset.vocabularies, {}, SplitTag::individual};
  for (std::size_t i = 0; i < n; ++i) {
    (in_population[i] ? population : individual).sequences.push_back(dataset.sequences[i]);
  }
  return {std::move(population), std::move(individual)};
}

ChronologicalSplit split_chronological(const BehaviorSequence& sequence, const SplitSpec& spec) {
  spec.check_fractions();
  const std::size_t n = sequence.events.size();
  if (n < kMinSplitLength) {
    throw DataError(fmt::format("user '{}': sequence of {} events too short to split (need {})",
                                sequence.user_id, n, kMinSplitLength));
  }
  // The epsilon absorbs representation error such as 0.7 * 100 = 70.00000000000001.
  auto part = [n](double f) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * f + 1e-9));
  };
  const std::size_t valid = part(spec.valid_fraction);
  const std::size_t test = part(spec.test_fraction);
  const std::size_t train = n - valid - test;

  auto slice = [&](std::size_t from, std::size_t count) {
    BehaviorSequence out{sequence.user_id, sequence.profile, {}, sequence.provenance};
    out.events.assign(sequence.events.begin() + static_cast<std::ptrdiff_t>(from),
                      sequence.events.begin() + static_cast<std::ptrdiff_t>(from + count));
    return out;
  };
  return {slice(0, train), slice(train, valid), slice(train + valid, test)};
}

std::vector<WeekSegment> segment_weekly(const BehaviorSequence& sequence) {
  std::vector<WeekSegment> out;
  for (const auto& e : sequence.events) {
    if (out.empty() || out.back().week_index != e.week_index) out.push_back({e.week_index, {}});
    out.back().events.push_back(e);
  }
  return out;
}

WeekSegment seed_window(const BehaviorSequence& sequence, int days) {
  WeekSegment out;
  if (sequence.events.empty() || days <= 0) return out;
  out.week_index = sequence.events.front().week_index;
  int seen_days = 0;
  std::pair<int, int> current{-1, -1};
  for (const auto& e : sequence.events) {
    const std::pair<int, int> day{e.week_index, e.weekday};
    if (day != current) {
      if (seen_days == days) break;
      ++seen_days;
      current = day;
    }
    out.events.push_back(e);
  }
  return out;
}

}  // namespace behsynth
