#include "doctest.h"

#include <fstream>
#include <string>

#include "behsynth/dataio.hpp"
#include "behsynth/json_io.hpp"
#include "helpers.hpp"

using namespace behsynth;
using testing::make_sequence;
using testing::small_vocab;
using testing::TempDir;

namespace {

BehaviorSequence counted(std::size_t n) {
  std::vector<BehaviorEvent> ev;
  for (std::size_t i = 0; i < n; ++i) {
    ev.push_back({static_cast<int>(i / 672), static_cast<int>(i / 96 % 7), static_cast<int>(i % 96), 0,
                  static_cast<int>(i % 18)});
  }
  return make_sequence("u", ev);
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("save then load is the identity") {
  TempDir dir;
  Rng rng(11);
  Dataset d;
  d.vocabularies = small_vocab();
  d.split_tag = SplitTag::individual;
  for (int u = 0; u < 5; ++u) {
    d.sequences.push_back(testing::random_sequence(rng, "user" + std::to_string(u), 60, 3, d.vocabularies));
  }
  d.sequences[1].provenance = Provenance::synthetic;
  save_dataset(d, dir / "d.csv");
  CHECK(std::filesystem::exists(profiles_sidecar_path(dir / "d.csv")));
  CHECK(std::filesystem::exists(vocab_sidecar_path(dir / "d.csv")));
  const auto loaded = load_dataset(dir / "d.csv");
  CHECK_FALSE(loaded.vocab_inferred);
  CHECK(loaded.dataset == d);
}

TEST_CASE("three-user file without a vocab sidecar infers the intent space") {
  TempDir dir;
  write(dir / "three.csv",
        "user_id,week,weekday,timeslot,location,intent\n"
        "a,0,0,10,1,2\n"
        "b,0,1,11,3,7\n"
        "c,0,2,12,0,4\n");
  const auto r = load_dataset(dir / "three.csv");
  CHECK(r.vocab_inferred);
  CHECK(r.dataset.sequences.size() == 3);
  CHECK(r.dataset.vocabularies.intent_count() == 8);
  CHECK(r.dataset.vocabularies.location_count() == 4);
}

TEST_CASE("the vocab sidecar is authoritative") {
  TempDir dir;
  write(dir / "s.csv", "user_id,week,weekday,timeslot,location,intent\na,0,0,10,1,2\n");
  write(vocab_sidecar_path(dir / "s.csv"), to_json(small_vocab()).dump());
  const auto r = load_dataset(dir / "s.csv");
  CHECK_FALSE(r.vocab_inferred);
  CHECK(r.dataset.vocabularies.intent_count() == 18);
}

TEST_CASE("strict load names the offending line") {
  TempDir dir;
  write(dir / "bad.csv",
        "user_id,week,weekday,timeslot,location,intent\n"
        "a,0,0,10,1,2\n"
        "a,0,9,11,1,2\n");
  write(vocab_sidecar_path(dir / "bad.csv"), to_json(small_vocab()).dump());
  try {
    (void)load_dataset(dir / "bad.csv");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("bad.csv:3") != std::string::npos);
  }
  LoadOptions lenient;
  lenient.strict = false;
  const auto r = load_dataset(dir / "bad.csv", kEventsCsvFormat, lenient);
  CHECK(r.dataset.event_count() == 1);
  CHECK(r.diagnostics.size() == 1);
}

TEST_CASE("load rejects empty files and bad headers") {
  TempDir dir;
  write(dir / "empty.csv", "user_id,week,weekday,timeslot,location,intent\n");
  try {
    (void)load_dataset(dir / "empty.csv");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("no sequences") != std::string::npos);
  }
  write(dir / "blank.csv", "");
  CHECK_THROWS_AS((void)load_dataset(dir / "blank.csv"), DataError);
  write(dir / "hdr.csv", "user,week\na,0\n");
  CHECK_THROWS_AS((void)load_dataset(dir / "hdr.csv"), DataError);
  CHECK_THROWS_AS((void)load_dataset(dir / "missing.csv"), DataError);
  CHECK_THROWS_AS((void)load_dataset(dir / "hdr.csv", "parquet"), ConfigError);
}

TEST_CASE("duplicate timestamps are dropped on load and reported") {
  TempDir dir;
  write(dir / "dup.csv",
        "user_id,week,weekday,timeslot,location,intent\n"
        "a,0,0,10,1,2\n"
        "a,0,0,10,1,3\n");
  const auto r = load_dataset(dir / "dup.csv");
  CHECK(r.dataset.event_count() == 1);
  CHECK(r.dataset.sequences[0].events[0].intent_id == 2);
  CHECK(r.diagnostics.size() == 1);
}

TEST_CASE("split_population_individual") {
  Dataset d;
  d.vocabularies = small_vocab();
  for (int u = 0; u < 667; ++u) d.sequences.push_back(make_sequence("u" + std::to_string(u), {}));
  SplitSpec spec;
  spec.population_user_count = 466;
  const auto [pop, ind] = split_population_individual(d, spec, 9);
  CHECK(pop.sequences.size() == 466);
  CHECK(ind.sequences.size() == 201);
  CHECK(pop.split_tag == SplitTag::population);
  CHECK(ind.split_tag == SplitTag::individual);
  const auto [pop2, ind2] = split_population_individual(d, spec, 9);
  CHECK(pop2 == pop);
  CHECK(ind2 == ind);

  spec.population_user_count = 0;
  CHECK_THROWS_AS((void)split_population_individual(d, spec, 9), ConfigError);
  spec.population_user_count = 667;
  CHECK_THROWS_AS((void)split_population_individual(d, spec, 9), ConfigError);
}

TEST_CASE("split_chronological floors valid/test and gives the rest to train") {
  SplitSpec spec;
  auto s100 = split_chronological(counted(100), spec);
  CHECK(s100.train.events.size() == 70);
  CHECK(s100.valid.events.size() == 10);
  CHECK(s100.test.events.size() == 20);
  auto s101 = split_chronological(counted(101), spec);
  CHECK(s101.train.events.size() == 71);
  CHECK(s101.valid.events.size() == 10);
  CHECK(s101.test.events.size() == 20);
  CHECK_THROWS_AS((void)split_chronological(counted(5), spec), DataError);

  // Order and multiset preserved.
  const auto seq = counted(257);
  const auto parts = split_chronological(seq, spec);
  std::vector<BehaviorEvent> joined = parts.train.events;
  joined.insert(joined.end(), parts.valid.events.begin(), parts.valid.events.end());
  joined.insert(joined.end(), parts.test.events.begin(), parts.test.events.end());
  CHECK(joined == seq.events);

  SplitSpec bad;
  bad.train_fraction = 0.8;
  CHECK_THROWS_AS(bad.check_fractions(), ConfigError);
}

TEST_CASE("segment_weekly") {
  auto s = make_sequence("u", {{0, 0, 1, 0, 0}, {0, 6, 2, 0, 0}, {1, 0, 1, 0, 0}, {3, 2, 5, 0, 0}});
  const auto segs = segment_weekly(s);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].week_index == 0);
  CHECK(segs[1].week_index == 1);
  CHECK(segs[2].week_index == 3);
  std::vector<BehaviorEvent> flat;
  for (const auto& g : segs) {
    CHECK_FALSE(g.events.empty());
    flat.insert(flat.end(), g.events.begin(), g.events.end());
  }
  CHECK(flat == s.events);

  auto one = make_sequence("u", {{2, 0, 1, 0, 0}, {2, 1, 1, 0, 0}});
  const auto single = segment_weekly(one);
  REQUIRE(single.size() == 1);
  CHECK(single[0].events == one.events);
}

TEST_CASE("seed_window keeps the first N distinct days") {
  auto s = make_sequence("u", {{0, 0, 1, 0, 0}, {0, 0, 2, 0, 0}, {0, 2, 1, 0, 0}, {1, 0, 1, 0, 0}});
  const auto w = seed_window(s, 2);
  CHECK(w.week_index == 0);
  CHECK(w.events.size() == 3);
  CHECK(seed_window(s, 7).events.size() == 4);
}
