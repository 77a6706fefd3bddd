#include "behsynth/simgen.hpp"

#include <algorithm>
#include <array>

#include <fmt/core.h>

#include "behsynth/json_io.hpp"
#include "behsynth/random.hpp"

namespace behsynth {

namespace {

// Seed streams.
constexpr std::uint64_t kPersonaStream = 0x9E75;
constexpr std::uint64_t kTemplateStream = 0x7E3A;
constexpr std::uint64_t kNoiseStream = 0x4015E;
constexpr std::uint64_t kDriftStream = 0xD21F7;

// Template drift: every event moves by 1..kMaxJitter slots and this share of
// intents is redrawn from the persona.
constexpr int kMaxJitter = 3;
constexpr double kIntentRedraw = 0.25;

constexpr int kWakeSlot = 24;  // 06:00; earlier slots only used for very busy days

// Natural location of each default intent.
constexpr std::array<int, 18> kIntentHomeLocation = {1, 2, 8, 3, 4, 4, 5, 3, 0,
                                                     7, 8, 0, 0, 0, 0, 1, 0, 9};

struct Persona {
  int work_start = 0;
  int work_end = 0;
  std::vector<int> workdays;
  std::vector<int> dominant;
  std::vector<std::uint32_t> dominant_weights;
  std::vector<int> leisure;
  std::vector<std::uint32_t> leisure_weights;
  std::vector<int> location_of_intent;
  int work_location = 0;

  [[nodiscard]] bool in_window(int weekday, int slot) const {
    return std::find(workdays.begin(), workdays.end(), weekday) != workdays.end() &&
           slot >= work_start && slot < work_end;
  }
};

Persona make_persona(const Archetype& a, const SimConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, {kPersonaStream}));
  Persona p;
  const int shift = rng.between(-4, 4);
  p.work_start = std::clamp(a.work_start_slot + shift, 0, kTimeslotCount - 1);
  p.work_end = std::clamp(a.work_end_slot + shift, p.work_start + 1, kTimeslotCount);
  p.workdays = a.workdays;
  p.dominant = a.dominant_intents;
  for (std::size_t i = 0; i < p.dominant.size(); ++i) {
    p.dominant_weights.push_back(i == 0 ? 8u : static_cast<std::uint32_t>(rng.between(2, 3)));
  }
  p.leisure = a.leisure_intents;
  for (std::size_t i = 0; i < p.leisure.size(); ++i) {
    p.leisure_weights.push_back(static_cast<std::uint32_t>(rng.between(1, 6)));
  }
  const int n_loc = cfg.vocabularies.location_count();
  const int n_int = cfg.vocabularies.intent_count();
  p.location_of_intent.resize(static_cast<std::size_t>(n_int));
  for (int i = 0; i < n_int; ++i) {
    const int natural = i < static_cast<int>(kIntentHomeLocation.size())
                            ? kIntentHomeLocation[static_cast<std::size_t>(i)]
                            : i;
    p.location_of_intent[static_cast<std::size_t>(i)] = natural % n_loc;
  }
  // Personal quirks: two intents happen somewhere unusual for this user.
  for (int k = 0; k < 2; ++k) {
    const auto intent = rng.below(static_cast<std::uint64_t>(n_int));
    p.location_of_intent[intent] = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_loc)));
  }
  p.work_location = a.work_location % n_loc;
  return p;
}

struct DayTemplate {
  std::vector<int> slots;
  std::vector<int> intents;
  std::vector<int> locations;
};

DayTemplate make_day(const Persona& p, int weekday, const SimConfig& cfg, Rng& rng) {
  DayTemplate day;
  const int count = rng.between(cfg.events_per_day_min, cfg.events_per_day_max);
  const int first = count > kTimeslotCount - kWakeSlot ? 0 : kWakeSlot;

  // Weighted sampling without replacement; in-window slots weigh 3.
  std::vector<int> candidates;
  std::vector<std::uint32_t> weights;
  for (int s = first; s < kTimeslotCount; ++s) {
    candidates.push_back(s);
    weights.push_back(p.in_window(weekday, s) ? 3u : 1u);
  }
  for (int i = 0; i < count; ++i) {
    const auto pick = rng.weighted(weights);
    day.slots.push_back(candidates[pick]);
    weights[pick] = 0;
  }
  std::sort(day.slots.begin(), day.slots.end());

  int prev = -1;
  for (int slot : day.slots) {
    const bool work = p.in_window(weekday, slot);
    const auto& support = work ? p.dominant : p.leisure;
    const auto& w = work ? p.dominant_weights : p.leisure_weights;
    const bool prev_in_support = std::find(support.begin(), support.end(), prev) != support.end();
    int intent = 0;
    if (prev_in_support && rng.bernoulli(0.5)) {
      intent = prev;
    } else {
      intent = support[rng.weighted(w)];
    }
    day.intents.push_back(intent);
    day.locations.push_back(work ? p.work_location
                                 : p.location_of_intent[static_cast<std::size_t>(intent)]);
    prev = intent;
  }
  return day;
}

DayTemplate drift_day(const DayTemplate& base, const Persona& p, int weekday, Rng& rng) {
  std::vector<std::array<int, 3>> events;  // slot, intent, location
  std::vector<bool> taken(kTimeslotCount, false);
  for (std::size_t i = 0; i < base.slots.size(); ++i) {
    int slot = base.slots[i];
    for (int attempt = 0; attempt < 8; ++attempt) {
      const int magnitude = rng.between(1, kMaxJitter);
      const int candidate = base.slots[i] + (rng.bernoulli(0.5) ? magnitude : -magnitude);
      if (candidate >= 0 && candidate < kTimeslotCount && !taken[static_cast<std::size_t>(candidate)]) {
        slot = candidate;
        break;
      }
    }
    if (taken[static_cast<std::size_t>(slot)]) continue;
    taken[static_cast<std::size_t>(slot)] = true;
    int intent = base.intents[i];
    int location = base.locations[i];
    if (rng.bernoulli(kIntentRedraw)) {
      const bool work = p.in_window(weekday, slot);
      const auto& support = work ? p.dominant : p.leisure;
      intent = support[rng.weighted(work ? p.dominant_weights : p.leisure_weights)];
      location = work ? p.work_location : p.location_of_intent[static_cast<std::size_t>(intent)];
    }
    events.push_back({slot, intent, location});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const auto& a, const auto& b) { return a[0] < b[0]; });
  DayTemplate day;
  for (const auto& e : events) {
    day.slots.push_back(e[0]);
    day.intents.push_back(e[1]);
    day.locations.push_back(e[2]);
  }
  return day;
}

}  // namespace

Vocabularies default_vocabularies() {
  Vocabularies v;
  v.locations = {"home", "office", "school", "restaurant", "mall",
                 "gym",  "park",   "hospital", "transit", "other"};
  v.intents = {"work",   "study",  "commute", "dining",  "shopping", "entertainment",
               "sports", "social", "rest",    "health",  "travel",   "reading",
               "music",  "video",  "games",   "finance", "news",     "other"};
  v.profile_tables["age_group"] = {{"18_24", "18-24"}, {"25_34", "25-34"}, {"35_44", "35-44"},
                                   {"45_54", "45-54"}, {"55_plus", "55+"}};
  v.profile_tables["education"] = {{"high_school", "High school"},
                                   {"bachelor", "Bachelor"},
                                   {"master", "Master"},
                                   {"doctorate", "Doctorate"}};
  v.profile_tables["gender"] = {{"female", "Female"}, {"male", "Male"}, {"nonbinary", "Non-binary"}};
  v.profile_tables["consumption_level"] = {{"low", "Low"}, {"medium", "Medium"}, {"high", "High"}};
  auto& occ = v.profile_tables["occupation"];
  for (const auto& a : default_archetypes()) occ.push_back({a.occupation, a.label});
  return v;
}

std::vector<Archetype> default_archetypes() {
  // intents: 0 work 1 study 2 commute 3 dining 4 shopping 5 entertainment
  // 6 sports 7 social 8 rest 9 health 10 travel 11 reading 12 music 13 video
  // 14 games 15 finance 16 news 17 other
  return {
      {"student", "Student", 32, 64, {0, 1, 2, 3, 4}, {1, 11}, {14, 13, 7, 12, 6}, 2},
      {"office_worker", "Office worker", 36, 72, {0, 1, 2, 3, 4}, {0, 15}, {3, 13, 16, 4, 8}, 1},
      {"service_worker", "Service worker", 40, 80, {1, 2, 3, 4, 5, 6}, {0, 7}, {8, 13, 4, 3, 12}, 4},
      {"freelancer", "Freelancer", 40, 76, {0, 1, 2, 3, 4, 5, 6}, {0, 12}, {10, 5, 3, 13, 6}, 0},
      {"retiree", "Retiree", 28, 48, {0, 1, 2, 3, 4, 5, 6}, {9, 6}, {8, 16, 11, 7, 13}, 6},
      {"driver", "Driver", 24, 68, {0, 1, 2, 3, 4, 5}, {2, 0}, {8, 3, 13, 12, 14}, 8},
  };
}

SimConfig::SimConfig() : archetypes(default_archetypes()), vocabularies(default_vocabularies()) {}

void SimConfig::check() const {
  if (weeks < 1) throw ConfigError("simulation weeks must be >= 1");
  if (first_week < 0) throw ConfigError("simulation first_week must be >= 0");
  if (!(routine_strength >= 0.0 && routine_strength <= 1.0)) {
    throw ConfigError("routine_strength must lie in [0,1]");
  }
  if (events_per_day_min < 1 || events_per_day_max > kTimeslotCount ||
      events_per_day_min > events_per_day_max) {
    throw ConfigError("events_per_day range must satisfy 1 <= min <= max <= 96");
  }
  vocabularies.check();
  for (const auto& a : archetypes) {
    auto intent_ok = [&](int i) { return i >= 0 && i < vocabularies.intent_count(); };
    if (a.dominant_intents.empty() || a.leisure_intents.empty()) {
      throw ConfigError(fmt::format("archetype '{}' needs dominant and leisure intents", a.occupation));
    }
    if (!std::all_of(a.dominant_intents.begin(), a.dominant_intents.end(), intent_ok) ||
        !std::all_of(a.leisure_intents.begin(), a.leisure_intents.end(), intent_ok)) {
      throw ConfigError(fmt::format("archetype '{}' references unknown intents", a.occupation));
    }
    if (a.work_start_slot < 0 || a.work_end_slot > kTimeslotCount ||
        a.work_start_slot >= a.work_end_slot) {
      throw ConfigError(fmt::format("archetype '{}' has an invalid work window", a.occupation));
    }
    if (a.work_location < 0 || a.work_location >= vocabularies.location_count()) {
      throw ConfigError(fmt::format("archetype '{}' has an unknown work location", a.occupation));
    }
    for (int d : a.workdays) {
      if (d < 0 || d >= kWeekdayCount) {
        throw ConfigError(fmt::format("archetype '{}' has an invalid workday", a.occupation));
      }
    }
  }
}

const Archetype& SimConfig::archetype_for(const std::string& occupation) const {
  for (const auto& a : archetypes) {
    if (a.occupation == occupation) return a;
  }
  throw ConfigError(fmt::format("no archetype for occupation '{}'", occupation));
}

std::vector<Archetype> load_archetypes(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  std::vector<Archetype> out;
  try {
    for (const auto& a : j.at("archetypes")) {
      Archetype x;
      x.occupation = a.at("occupation").get<std::string>();
      x.label = a.value("label", x.occupation);
      x.work_start_slot = a.at("work_start_slot").get<int>();
      x.work_end_slot = a.at("work_end_slot").get<int>();
      x.workdays = a.at("workdays").get<std::vector<int>>();
      x.dominant_intents = a.at("dominant_intents").get<std::vector<int>>();
      x.leisure_intents = a.at("leisure_intents").get<std::vector<int>>();
      x.work_location = a.at("work_location").get<int>();
      out.push_back(std::move(x));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("{}: bad archetype table: {}", path.string(), e.what()));
  }
  if (out.empty()) throw ConfigError(fmt::format("{}: archetype table is empty", path.string()));
  return out;
}

BehaviorSequence simulate_user(const UserProfile& profile, const SimConfig& cfg,
                               std::string user_id) {
  cfg.check();
  const Archetype& archetype = cfg.archetype_for(profile.occupation.code);
  const Persona persona = make_persona(archetype, cfg);

  Rng template_rng(derive_seed(cfg.seed, {kTemplateStream}));
  std::array<DayTemplate, kWeekdayCount> days;
  for (int d = 0; d < kWeekdayCount; ++d) {
    days[static_cast<std::size_t>(d)] = make_day(persona, d, cfg, template_rng);
  }
  if (cfg.template_shift != 0) {
    Rng drift_rng(derive_seed(cfg.seed, {kDriftStream, cfg.template_shift}));
    for (int d = 0; d < kWeekdayCount; ++d) {
      auto& day = days[static_cast<std::size_t>(d)];
      day = drift_day(day, persona, d, drift_rng);
    }
  }

  const auto n_int = static_cast<std::uint64_t>(cfg.vocabularies.intent_count());
  const auto n_loc = static_cast<std::uint64_t>(cfg.vocabularies.location_count());
  BehaviorSequence seq{std::move(user_id), profile, {}, Provenance::real};
  for (int w = cfg.first_week; w < cfg.first_week + cfg.weeks; ++w) {
    Rng noise(derive_seed(cfg.seed, {kNoiseStream, cfg.template_shift,
                                     static_cast<std::uint64_t>(w)}));
    for (int d = 0; d < kWeekdayCount; ++d) {
      const auto& day = days[static_cast<std::size_t>(d)];
      for (std::size_t i = 0; i < day.slots.size(); ++i) {
        BehaviorEvent e{w, d, day.slots[i], day.locations[i], day.intents[i]};
        if (!noise.bernoulli(cfg.routine_strength)) {
          e.intent_id = static_cast<int>(noise.below(n_int));
          e.location_id = static_cast<int>(noise.below(n_loc));
        }
        seq.events.push_back(e);
      }
    }
  }
  return seq;
}

std::string simulated_user_id(std::size_t ordinal) { return fmt::format("user_{:04d}", ordinal); }

Dataset simulate_population(std::span<const UserProfile> profiles, const SimConfig& cfg) {
  if (profiles.empty()) throw ConfigError("simulate_population: empty profile list");
  Dataset out{cfg.vocabularies, {}, SplitTag::unsplit};
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    SimConfig user_cfg = cfg;
    user_cfg.seed = cfg.seed + i;
    out.sequences.push_back(simulate_user(profiles[i], user_cfg, simulated_user_id(i)));
  }
  return out;
}

std::vector<UserProfile> sample_profiles(std::size_t count, std::uint64_t seed,
                                         const SimConfig& cfg) {
  if (cfg.archetypes.empty()) throw ConfigError("no archetypes configured");
  Rng rng(derive_seed(seed, {0x960F11E}));
  std::vector<UserProfile> out;
  auto draw = [&](const std::string& name) -> CodedLabel {
    auto it = cfg.vocabularies.profile_tables.find(name);
    if (it == cfg.vocabularies.profile_tables.end() || it->second.empty()) {
      return {"unknown", "unknown"};
    }
    return it->second[rng.below(it->second.size())];
  };
  for (std::size_t i = 0; i < count; ++i) {
    UserProfile p;
    p.age_group = draw("age_group");
    p.education = draw("education");
    p.gender = draw("gender");
    p.consumption_level = draw("consumption_level");
    const auto& a = cfg.archetypes[i % cfg.archetypes.size()];
    p.occupation = {a.occupation, a.label};
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace behsynth
