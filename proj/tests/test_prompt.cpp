#include "doctest.h"

#include <algorithm>
#include <sstream>

#include "behsynth/backends.hpp"
#include "behsynth/json_io.hpp"
#include "behsynth/prompt.hpp"
#include "helpers.hpp"

using namespace behsynth;
using testing::small_vocab;

namespace {

std::string valid_week(int lines, int offset = 0) {
  std::ostringstream out;
  for (int i = 0; i < lines; ++i) out << (i / 14) % 7 << ',' << (i * 5 + offset) % 96 << ",1,2\n";
  return out.str();
}

std::size_t count_lines(const std::string& text, std::string_view marker) {
  const auto at = text.find(marker);
  REQUIRE(at != std::string::npos);
  const auto rest = text.substr(at + marker.size());
  return static_cast<std::size_t>(std::count(rest.begin(), rest.end(), '\n'));
}

WeekSegment seed_of(std::size_t n) {
  WeekSegment s;
  for (std::size_t i = 0; i < n; ++i) {
    s.events.push_back({0, static_cast<int>(i / 96), static_cast<int>(i % 96), 1, 3});
  }
  return s;
}

}  // namespace

TEST_CASE("prompt carries the rules, the line format and the seed window") {
  GenerationPolicy policy;
  const auto bundle = build_generation_prompt(testing::profile_for("student"), seed_of(105), policy);
  CHECK(bundle.system_text.find("\"weekday,timestamp,loc,intent\"") != std::string::npos);
  CHECK(bundle.system_text.find("minimum 90 lines") != std::string::npos);
  CHECK(bundle.system_text.find("more than 100 lines") != std::string::npos);
  CHECK(bundle.system_text.find("range of 0-6") != std::string::npos);
  CHECK(bundle.system_text.find("range of 0-95") != std::string::npos);
  for (const char* rule : {"\n1. ", "\n2. ", "\n3. ", "\n4. "}) {
    CHECK(bundle.system_text.find(rule) != std::string::npos);
  }
  CHECK(count_lines(bundle.user_text, "Behavior data:\n") == 105);
  CHECK(bundle.user_text.find("\"occupation\":\"student\"") != std::string::npos);

  policy.min_lines = 42;
  const auto custom = build_generation_prompt(testing::profile_for("student"), seed_of(3), policy);
  CHECK(custom.system_text.find("minimum 42 lines") != std::string::npos);
}

TEST_CASE("conditioning on the previous week appends it to the prompt") {
  GenerationPolicy policy;
  std::vector<BehaviorEvent> prev{{0, 1, 2, 3, 4}};
  const auto b = build_generation_prompt(testing::profile_for("student"), seed_of(2), policy, &prev);
  CHECK(b.user_text.find("Previously generated week:\n1,2,3,4\n") != std::string::npos);
}

TEST_CASE("parser categorises each line") {
  const auto v = small_vocab();
  GenerationPolicy policy;
  SUBCASE("95 valid lines pass") {
    const auto r = parse_generated(valid_week(95), v, policy);
    CHECK(r.valid_events.size() == 95);
    CHECK(r.met_min_lines);
    CHECK(r.passed());
  }
  SUBCASE("too few lines fail without violations") {
    const auto r = parse_generated(valid_week(50), v, policy);
    CHECK(r.violations.empty());
    CHECK_FALSE(r.met_min_lines);
    CHECK_FALSE(r.passed());
  }
  SUBCASE("one line per category") {
    const std::string text = "3,48,12\n2,100,4,7\n7,10,1,1\nx,1,1,1\n1,1,10,1\n1,1,1,18\n1,2,3,4\n";
    const auto r = parse_generated(text, v, policy);
    REQUIRE(r.violations.size() == 6);
    CHECK(r.violations[0].kind == ViolationKind::field_count);
    CHECK(r.violations[1].kind == ViolationKind::timeslot_range);
    CHECK(r.violations[2].kind == ViolationKind::weekday_range);
    CHECK(r.violations[3].kind == ViolationKind::non_integer);
    CHECK(r.violations[4].kind == ViolationKind::unknown_location);
    CHECK(r.violations[5].kind == ViolationKind::unknown_intent);
    CHECK(r.violations[1].line_number == 2);
    CHECK(r.valid_events.size() + r.violations.size() == r.total_lines);
  }
  SUBCASE("code fences and blank lines are ignored") {
    const auto r = parse_generated("```csv\n\n" + valid_week(92) + "\n```\n", v, policy);
    CHECK(r.total_lines == 92);
    CHECK(r.passed());
  }
  SUBCASE("a fence in the middle is a violation") {
    const auto r = parse_generated(valid_week(45) + "```\n" + valid_week(50), v, policy);
    CHECK(r.violations.size() == 1);
  }
}

TEST_CASE("serialize/parse round trip") {
  const auto v = small_vocab();
  GenerationPolicy policy;
  policy.min_lines = 1;
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    auto s = testing::random_sequence(rng, "u", 150, 1, v);
    for (auto& e : s.events) e.week_index = 0;
    const auto r = parse_generated(serialize_events(s.events), v, policy);
    CHECK(r.violations.empty());
    CHECK(r.valid_events == s.events);
  }
}

TEST_CASE("generate_user retry and exhaustion contracts") {
  const auto v = small_vocab();
  GenerationContext ctx;
  ctx.vocabularies = &v;
  ctx.policy.target_weeks = 2;
  const auto p = testing::profile_for("student");
  const auto seed = seed_of(20);

  SUBCASE("happy path") {
    ReplayBackend backend({{"u", 0, valid_week(95)}, {"u", 1, valid_week(95, 1)}});
    const auto r = generate_user(backend, "u", p, seed, ctx);
    CHECK(r.attempts == 2);
    CHECK(r.first_attempt_valid);
    REQUIRE(r.final_sequence);
    CHECK(r.failed_segments.empty());
    CHECK(r.final_sequence->events.front().week_index == 0);
    CHECK(r.final_sequence->events.back().week_index == 1);
    CHECK(r.final_sequence->provenance == Provenance::synthetic);
  }
  SUBCASE("malformed first response is retried") {
    ReplayBackend backend({{"u", 0, "garbage"}, {"u", 0, valid_week(95)}, {"u", 1, valid_week(95)}});
    const auto r = generate_user(backend, "u", p, seed, ctx);
    CHECK_FALSE(r.first_attempt_valid);
    CHECK(r.attempts == 3);
    CHECK(r.final_sequence);
  }
  SUBCASE("always malformed exhausts every segment") {
    std::vector<std::tuple<std::string, int, std::string>> rec;
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 3; ++a) rec.emplace_back("u", s, "1,2\n");
    }
    ReplayBackend backend(rec);
    const auto r = generate_user(backend, "u", p, seed, ctx);
    CHECK_FALSE(r.final_sequence);
    CHECK(r.attempts == 6);
    CHECK(r.failed_segments == std::vector<int>{0, 1});
  }
  SUBCASE("replay exhaustion is a backend error") {
    ReplayBackend backend({{"u", 0, valid_week(95)}});
    CHECK_THROWS_AS((void)generate_user(backend, "u", p, seed, ctx), BackendError);
  }
}

TEST_CASE("pass_at_1 counts first attempts and ignores order") {
  std::vector<GenerationRecord> records(10);
  for (std::size_t i = 0; i < records.size(); ++i) records[i].first_attempt_valid = i % 5 != 0;
  CHECK(pass_at_1(records) == doctest::Approx(0.8));
  std::reverse(records.begin(), records.end());
  CHECK(pass_at_1(records) == doctest::Approx(0.8));
  for (auto& r : records) r.first_attempt_valid = true;
  CHECK(pass_at_1(records) == 1.0);
  CHECK_THROWS_AS((void)pass_at_1(std::vector<GenerationRecord>{}), DataError);
}

TEST_CASE("generate_population keeps input order and writes an audit trail") {
  testing::TempDir dir;
  const auto v = small_vocab();
  std::vector<std::tuple<std::string, int, std::string>> rec;
  std::vector<UserSeed> users;
  for (int u = 0; u < 12; ++u) {
    const auto id = "u" + std::to_string(u);
    rec.emplace_back(id, 0, valid_week(95, u));
    users.push_back({id, testing::profile_for("student"), seed_of(5)});
  }
  ReplayBackend backend(rec);
  AuditLog audit(dir / "audit.jsonl");
  GenerationContext ctx{&v, {}, 0, &audit};
  ctx.policy.target_weeks = 1;
  const auto records = generate_population(backend, users, ctx, 4);
  REQUIRE(records.size() == 12);
  for (int u = 0; u < 12; ++u) CHECK(records[static_cast<std::size_t>(u)].user_id == "u" + std::to_string(u));

  const auto text = read_text_file(dir / "audit.jsonl");
  CHECK(std::count(text.begin(), text.end(), '\n') == 12);
  const auto first = Json::parse(text.substr(0, text.find('\n')));
  CHECK(first.contains("response"));
  CHECK(first.at("report").at("passed").get<bool>());
}

TEST_CASE("GenerationPolicy validation") {
  GenerationPolicy p;
  p.min_lines = 0;
  CHECK_THROWS_AS(p.check(), ConfigError);
  p = GenerationPolicy{};
  p.max_attempts_per_segment = 0;
  CHECK_THROWS_AS(p.check(), ConfigError);
}
