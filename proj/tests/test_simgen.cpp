#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "behsynth/fidelity.hpp"
#include "behsynth/simgen.hpp"
#include "helpers.hpp"

using namespace behsynth;

namespace {

std::vector<double> intent_counts(const BehaviorSequence& s, int n) {
  std::vector<double> c(static_cast<std::size_t>(n), 0.0);
  for (const auto& e : s.events) c[static_cast<std::size_t>(e.intent_id)] += 1.0;
  return c;
}

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_CASE("simulate_user is deterministic and valid") {
  SimConfig cfg;
  cfg.seed = 77;
  const auto p = testing::profile_for("student");
  const auto a = simulate_user(p, cfg, "x");
  const auto b = simulate_user(p, cfg, "x");
  CHECK(a == b);
  Dataset d{cfg.vocabularies, {a}, SplitTag::unsplit};
  CHECK(validate_dataset(d).empty());
  std::set<int> weeks;
  for (const auto& e : a.events) weeks.insert(e.week_index);
  CHECK(weeks.size() == 4);
  cfg.seed = 78;
  CHECK_FALSE(simulate_user(p, cfg, "x") == a);
}

TEST_CASE("routine_strength 1 repeats every weekday exactly") {
  SimConfig cfg;
  cfg.seed = 5;
  cfg.routine_strength = 1.0;
  const auto s = simulate_user(testing::profile_for("office_worker"), cfg);
  std::map<std::pair<int, int>, std::vector<std::tuple<int, int, int>>> by_day;
  for (const auto& e : s.events) by_day[{e.week_index, e.weekday}].emplace_back(e.timeslot, e.location_id, e.intent_id);
  for (int w = 1; w < cfg.weeks; ++w) {
    for (int d = 0; d < 7; ++d) CHECK(by_day[{w, d}] == by_day[{0, d}]);
  }
}

TEST_CASE("routine_strength 0 gives a near-uniform intent marginal") {
  SimConfig cfg;
  cfg.seed = 19;
  cfg.routine_strength = 0.0;
  cfg.weeks = 4;
  std::vector<UserProfile> profiles;
  for (int i = 0; i < 24; ++i) profiles.push_back(testing::profile_for(i % 2 ? "student" : "retiree"));
  const auto d = simulate_population(profiles, cfg);
  REQUIRE(d.event_count() >= 10000);
  const auto hist = intent_histogram(d.sequences, d.vocabularies);
  std::vector<double> uniform(hist.support_size(), 1.0 / static_cast<double>(hist.support_size()));
  CHECK(jsd(hist, CategoricalDistribution(uniform)) < 0.05);
  for (std::size_t i = 0; i < hist.support_size(); ++i) CHECK(std::abs(hist[i] - uniform[i]) < 0.02);
}

TEST_CASE("per-user argmax is the archetype's first dominant intent at routine_strength >= 0.8") {
  for (double rs : {0.8, 0.9, 1.0}) {
    SimConfig cfg;
    cfg.routine_strength = rs;
    for (const auto& a : cfg.archetypes) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        cfg.seed = 1000 + seed;
        const auto s = simulate_user(testing::profile_for(a.occupation), cfg);
        CHECK_MESSAGE(argmax(intent_counts(s, cfg.vocabularies.intent_count())) == a.dominant_intents.front(),
                      a.occupation, " rs=", rs, " seed=", seed);
      }
    }
  }
}

TEST_CASE("student and office worker differ in dominant intent") {
  SimConfig cfg;
  cfg.seed = 3;
  const int n = cfg.vocabularies.intent_count();
  const auto s = simulate_user(testing::profile_for("student"), cfg);
  const auto o = simulate_user(testing::profile_for("office_worker"), cfg);
  CHECK(argmax(intent_counts(s, n)) != argmax(intent_counts(o, n)));
}

TEST_CASE("simulate_population cardinality and preconditions") {
  SimConfig cfg;
  cfg.seed = 1;
  const auto profiles = sample_profiles(20, 1, cfg);
  const auto d = simulate_population(profiles, cfg);
  CHECK(d.sequences.size() == 20);
  CHECK(d.sequences[3].user_id == simulated_user_id(3));
  CHECK(validate_dataset(d).empty());
  CHECK_THROWS_AS((void)simulate_population(std::vector<UserProfile>{}, cfg), ConfigError);
  CHECK_THROWS_AS((void)simulate_user(testing::profile_for("astronaut"), cfg), ConfigError);
}

TEST_CASE("template shift keeps habits while moving events to new times") {
  SimConfig cfg;
  cfg.seed = 8;
  cfg.routine_strength = 1.0;
  cfg.weeks = 1;
  const auto p = testing::profile_for("office_worker");
  const auto base = simulate_user(p, cfg);
  cfg.template_shift = 1;
  const auto shifted = simulate_user(p, cfg);
  std::set<std::tuple<int, int, int>> keys;
  for (const auto& e : base.events) keys.insert(e.time_key());
  std::size_t shared = 0;
  for (const auto& e : shifted.events) shared += keys.count(e.time_key());
  // Jittered slots can land on another event's slot, but most move to new times.
  CHECK(shared < shifted.events.size() / 2);
  const int n = cfg.vocabularies.intent_count();
  CHECK(argmax(intent_counts(base, n)) == argmax(intent_counts(shifted, n)));
}

TEST_CASE("SimConfig validation") {
  SimConfig cfg;
  cfg.routine_strength = 1.5;
  CHECK_THROWS_AS(cfg.check(), ConfigError);
  cfg = SimConfig{};
  cfg.events_per_day_min = 30;
  cfg.events_per_day_max = 20;
  CHECK_THROWS_AS(cfg.check(), ConfigError);
  cfg = SimConfig{};
  cfg.archetypes[0].dominant_intents = {99};
  CHECK_THROWS_AS(cfg.check(), ConfigError);
}

TEST_CASE("archetype tables load from JSON") {
  testing::TempDir dir;
  {
    std::ofstream out(dir / "a.json");
    out << R"({"archetypes": [{"occupation": "nurse", "label": "Nurse", "work_start_slot": 28,
              "work_end_slot": 60, "workdays": [0, 2, 4], "dominant_intents": [9, 0],
              "leisure_intents": [8, 3], "work_location": 7}]})";
  }
  const auto a = load_archetypes(dir / "a.json");
  REQUIRE(a.size() == 1);
  CHECK(a[0].occupation == "nurse");
  CHECK(a[0].workdays == std::vector<int>{0, 2, 4});
  {
    std::ofstream out(dir / "bad.json");
    out << R"({"archetypes": [{"occupation": "x"}]})";
  }
  CHECK_THROWS_AS((void)load_archetypes(dir / "bad.json"), ConfigError);
}
