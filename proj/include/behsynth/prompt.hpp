#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "behsynth/core.hpp"
#include "behsynth/dataio.hpp"

namespace behsynth {

struct PromptBundle {
  std::string system_text;  ///< role setting and numbered output rules
  std::string user_text;    ///< profile plus seed behaviour lines
};

struct GenerationPolicy {
  int seed_window_days = 7;
  /// Valid-line count a response needs to pass.
  int min_lines = 90;
  /// Line count the prompt asks for in its last rule; advisory only.
  int requested_lines = 100;
  int max_attempts_per_segment = 3;
  /// Output horizon in weekly segments.
  int target_weeks = 4;
  /// Include the previously accepted week in the next segment's prompt.
  bool condition_on_previous = false;

  void check() const;
};

struct LineViolation {
  std::size_t line_number = 0;  ///< 1-based, in the raw response
  ViolationKind kind = ViolationKind::field_count;
};

struct ParseReport {
  std::size_t total_lines = 0;  ///< non-blank lines excluding code fences
  std::vector<BehaviorEvent> valid_events;
  std::vector<LineViolation> violations;
  bool met_min_lines = false;

  /// Whole-output validity: no violation and enough lines.
  [[nodiscard]] bool passed() const { return violations.empty() && met_min_lines; }
};

struct GenerationRecord {
  std::string user_id;
  int attempts = 0;
  bool first_attempt_valid = false;
  std::optional<BehaviorSequence> final_sequence;
  std::vector<int> failed_segments;
  std::vector<ParseReport> attempt_reports;
};

/// "weekday,timestamp,loc,intent" lines, LF-terminated.
[[nodiscard]] std::string serialize_events(std::span<const BehaviorEvent> events);

[[nodiscard]] PromptBundle build_generation_prompt(const UserProfile& profile,
                                                   const WeekSegment& seed,
                                                   const GenerationPolicy& policy,
                                                   const std::vector<BehaviorEvent>* previous_week = nullptr);

/// Classifies every line. Parsed events carry week_index 0; blank lines and a
/// leading/trailing code fence are ignored, anything else is a violation.
[[nodiscard]] ParseReport parse_generated(std::string_view text, const Vocabularies& vocab,
                                          const GenerationPolicy& policy);

class GeneratorBackend;

/// Append-only JSON-lines transcript of every generation attempt.
class AuditLog {
 public:
  explicit AuditLog(const std::filesystem::path& path);

  void append(const std::string& user_id, int run, int segment, int attempt,
              const PromptBundle& prompt, const std::string& response, const ParseReport& report);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

struct GenerationContext {
  const Vocabularies* vocabularies = nullptr;
  GenerationPolicy policy;
  int run = 0;
  AuditLog* audit = nullptr;
};

/// Segmented generation for one user: one backend call per target week, each
/// retried until it parses cleanly or attempts run out. Backend exceptions
/// propagate.
[[nodiscard]] GenerationRecord generate_user(GeneratorBackend& backend, const std::string& user_id,
                                             const UserProfile& profile, const WeekSegment& seed,
                                             const GenerationContext& ctx);

/// Fraction of records whose very first backend call produced a valid output.
[[nodiscard]] double pass_at_1(std::span<const GenerationRecord> records);

struct UserSeed {
  std::string user_id;
  UserProfile profile;
  WeekSegment seed;
};

/// Runs generate_user for each user on up to `max_parallel` threads. Results
/// are returned in input order.
[[nodiscard]] std::vector<GenerationRecord> generate_population(GeneratorBackend& backend,
                                                                std::span<const UserSeed> users,
                                                                const GenerationContext& ctx,
                                                                std::size_t max_parallel);

}  // namespace behsynth
