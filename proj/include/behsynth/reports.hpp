#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "behsynth/downstream.hpp"
#include "behsynth/fidelity.hpp"
#include "behsynth/json_io.hpp"
#include "behsynth/privacy.hpp"

namespace behsynth {

// Every report document is a plain-text table followed by the same content as
// JSON between these markers.
inline constexpr std::string_view kJsonBegin = "-----BEGIN JSON-----";
inline constexpr std::string_view kJsonEnd = "-----END JSON-----";

struct ValidationSummary {
  std::string dataset;  ///< file name only
  std::size_t users = 0;
  std::size_t events = 0;
  bool vocab_inferred = false;
  std::vector<std::string> diagnostics;
  std::vector<std::string> problems;

  [[nodiscard]] bool valid() const { return problems.empty(); }
};

struct GenerationRun {
  int run = 0;
  double pass1 = 0.0;
  std::size_t users = 0;
  std::size_t failed_users = 0;    ///< users with at least one failed segment
  std::size_t total_attempts = 0;
  std::size_t synthetic_events = 0;
  std::string output;              ///< file name only
};

struct GenerationSummary {
  std::string backend;
  std::vector<GenerationRun> runs;
};

[[nodiscard]] Json to_json(const ValidationSummary& v);
[[nodiscard]] Json to_json(const GenerationSummary& g);
[[nodiscard]] Json to_json(const FidelityReport& f);
[[nodiscard]] Json to_json(const PrivacyReport& p);
[[nodiscard]] Json to_json(const ScenarioReport& s);

/// Text table for one report body; `kind` is one of validation, generation,
/// fidelity, privacy, scenario.
[[nodiscard]] std::string render_table(std::string_view kind, const Json& body);

/// Title, table and {"kind", "body"} JSON block.
[[nodiscard]] std::string render_document(std::string_view kind, const Json& body);

/// Parses the JSON block of a report document; throws DataError when absent.
[[nodiscard]] Json extract_json_block(std::string_view document);

/// One document holding every section's table and a combined JSON block
/// {"kind": "summary", "sections": [{"kind", "body"}, ...]}.
[[nodiscard]] std::string render_summary(const std::vector<std::pair<std::string, Json>>& sections);

}  // namespace behsynth
