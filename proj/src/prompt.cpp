#include "behsynth/prompt.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <thread>

#include <fmt/core.h>

#include "behsynth/backends.hpp"
#include "behsynth/json_io.hpp"

namespace behsynth {

void GenerationPolicy::check() const {
  if (seed_window_days < 1) throw ConfigError("seed_window_days must be >= 1");
  if (min_lines < 1) throw ConfigError("min_lines must be >= 1");
  if (requested_lines < 1) throw ConfigError("requested_lines must be >= 1");
  if (max_attempts_per_segment < 1) throw ConfigError("max_attempts_per_segment must be >= 1");
  if (target_weeks < 1) throw ConfigError("target_weeks must be >= 1");
}

std::string serialize_events(std::span<const BehaviorEvent> events) {
  std::string out;
  out.reserve(events.size() * 12);
  for (const auto& e : events) {
    out += fmt::format("{},{},{},{}\n", e.weekday, e.timeslot, e.location_id, e.intent_id);
  }
  return out;
}

PromptBundle build_generation_prompt(const UserProfile& profile, const WeekSegment& seed,
                                     const GenerationPolicy& policy,
                                     const std::vector<BehaviorEvent>* previous_week) {
  PromptBundle bundle;
  bundle.system_text = fmt::format(
      "You produce synthetic behaviour records for one person from their profile and a sample "
      "of their real records. Each record is [weekday, timestamp, loc, intent].\n"
      "\n"
      "Rules:\n"
      "1. Output one week of records (minimum {} lines), one per line, in the exact format: "
      "\"weekday,timestamp,loc,intent\".\n"
      "2. Follow this person's habits (daily routine, working hours, leisure) and vary locations "
      "(loc) and intents; do not repeat the same lines.\n"
      "3. Ensure the weekdays values are within the range of 0-6, and timestamp values are within "
      "the range of 0-95.\n"
      "4. Return more than {} lines, all in the correct format.\n",
      policy.min_lines, policy.requested_lines);

  Json labels = Json::object();
  for (std::size_t i = 0; i < UserProfile::kAttributeNames.size(); ++i) {
    const auto& attr = profile.attribute(i);
    labels[std::string(UserProfile::kAttributeNames[i])] = attr.label.empty() ? attr.code : attr.label;
  }
  bundle.user_text = "Profile:\n" + labels.dump() + "\nBehavior data:\n" + serialize_events(seed.events);
  if (previous_week != nullptr && !previous_week->empty()) {
    bundle.user_text += "Previously generated week:\n" + serialize_events(*previous_week);
  }
  return bundle;
}

namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool is_fence(std::string_view line) { return line.substr(0, 3) == "```"; }

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

}  // namespace

ParseReport parse_generated(std::string_view text, const Vocabularies& vocab,
                            const GenerationPolicy& policy) {
  struct Line {
    std::size_t number;
    std::string_view content;
  };
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++number;
    const auto content = trim(text.substr(start, end - start));
    if (!content.empty()) lines.push_back({number, content});
    start = end + 1;
  }
  // An opening fence (optionally tagged, e.g. ```csv) and a bare closing fence.
  if (!lines.empty() && is_fence(lines.front().content)) lines.erase(lines.begin());
  if (!lines.empty() && lines.back().content == "```") lines.pop_back();

  ParseReport report;
  report.total_lines = lines.size();
  for (const auto& line : lines) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.content.find(',', pos);
      fields.push_back(trim(line.content.substr(pos, comma == std::string_view::npos
                                                         ? std::string_view::npos
                                                         : comma - pos)));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 4) {
      report.violations.push_back({line.number, ViolationKind::field_count});
      continue;
    }
    std::array<int, 4> v{};
    bool numeric = true;
    for (std::size_t i = 0; i < 4; ++i) {
      auto parsed = to_int(fields[i]);
      if (!parsed) {
        numeric = false;
        break;
      }
      v[i] = *parsed;
    }
    if (!numeric) {
      report.violations.push_back({line.number, ViolationKind::non_integer});
      continue;
    }
    const BehaviorEvent event{0, v[0], v[1], v[2], v[3]};
    const auto problems = validate_event(event, vocab);
    if (!problems.empty()) {
      report.violations.push_back({line.number, problems.front().kind});
      continue;
    }
    report.valid_events.push_back(event);
  }
  report.met_min_lines = report.valid_events.size() >= static_cast<std::size_t>(policy.min_lines);
  return report;
}

AuditLog::AuditLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app | std::ios::binary);
  if (!out_) throw DataError(fmt::format("cannot open audit log '{}'", path.string()));
}

void AuditLog::append(const std::string& user_id, int run, int segment, int attempt,
                      const PromptBundle& prompt, const std::string& response,
                      const ParseReport& report) {
  Json violations = Json::array();
  for (const auto& v : report.violations) {
    violations.push_back(Json{{"line", v.line_number}, {"category", to_string(v.kind)}});
  }
  const Json record{{"user_id", user_id},
                    {"run", run},
                    {"segment_index", segment},
                    {"attempt", attempt},
                    {"system", prompt.system_text},
                    {"user", prompt.user_text},
                    {"response", response},
                    {"report",
                     {{"total_lines", report.total_lines},
                      {"valid_events", report.valid_events.size()},
                      {"met_min_lines", report.met_min_lines},
                      {"passed", report.passed()},
                      {"violations", std::move(violations)}}}};
  std::lock_guard lock(mutex_);
  out_ << record.dump() << '\n';
  out_.flush();
}

GenerationRecord generate_user(GeneratorBackend& backend, const std::string& user_id,
                               const UserProfile& profile, const WeekSegment& seed,
                               const GenerationContext& ctx) {
  if (ctx.vocabularies == nullptr) throw ConfigError("generation context lacks vocabularies");
  if (seed.events.empty()) throw DataError(fmt::format("user '{}': empty seed window", user_id));
  ctx.policy.check();

  GenerationRecord record;
  record.user_id = user_id;
  BehaviorSequence sequence{user_id, profile, {}, Provenance::synthetic};
  std::vector<BehaviorEvent> previous;
  bool any_success = false;

  for (int week = 0; week < ctx.policy.target_weeks; ++week) {
    const auto bundle = build_generation_prompt(
        profile, seed, ctx.policy, ctx.policy.condition_on_previous ? &previous : nullptr);
    bool accepted = false;
    for (int attempt = 0; attempt < ctx.policy.max_attempts_per_segment && !accepted; ++attempt) {
      CompletionRequest request{bundle, user_id, profile, ctx.run, week, attempt};
      const std::string response = backend.complete(request);
      ++record.attempts;
      ParseReport report = parse_generated(response, *ctx.vocabularies, ctx.policy);
      if (record.attempts == 1) record.first_attempt_valid = report.passed();
      if (ctx.audit != nullptr) ctx.audit->append(user_id, ctx.run, week, attempt, bundle, response, report);
      if (report.passed()) {
        accepted = true;
        BehaviorSequence segment{user_id, profile, report.valid_events, Provenance::synthetic};
        for (auto& e : segment.events) e.week_index = week;
        segment = sort_and_dedupe(std::move(segment)).sequence;
        previous = segment.events;
        sequence.events.insert(sequence.events.end(), segment.events.begin(), segment.events.end());
      }
      record.attempt_reports.push_back(std::move(report));
    }
    if (accepted) {
      any_success = true;
    } else {
      record.failed_segments.push_back(week);
    }
  }
  if (any_success) record.final_sequence = std::move(sequence);
  return record;
}

double pass_at_1(std::span<const GenerationRecord> records) {
  if (records.empty()) throw DataError("pass_at_1: no generation records");
  const auto valid = std::count_if(records.begin(), records.end(),
                                   [](const GenerationRecord& r) { return r.first_attempt_valid; });
  return static_cast<double>(valid) / static_cast<double>(records.size());
}

std::vector<GenerationRecord> generate_population(GeneratorBackend& backend,
                                                  std::span<const UserSeed> users,
                                                  const GenerationContext& ctx,
                                                  std::size_t max_parallel) {
  std::vector<GenerationRecord> out(users.size());
  std::vector<std::exception_ptr> errors(users.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < users.size(); i = next++) {
      try {
        out[i] = generate_user(backend, users[i].user_id, users[i].profile, users[i].seed, ctx);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(max_parallel, 1, std::max<std::size_t>(users.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace behsynth
