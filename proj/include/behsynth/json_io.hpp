#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "behsynth/core.hpp"

namespace behsynth {

using Json = nlohmann::ordered_json;

[[nodiscard]] Json to_json(const CodedLabel& value);
[[nodiscard]] Json to_json(const UserProfile& profile);
[[nodiscard]] Json to_json(const Vocabularies& vocab);

/// Throw DataError on missing or mistyped fields.
[[nodiscard]] CodedLabel coded_label_from_json(const Json& j, std::string_view context);
[[nodiscard]] UserProfile profile_from_json(const Json& j);
[[nodiscard]] Vocabularies vocabularies_from_json(const Json& j);

/// Parse a whole file as JSON; unreadable or malformed files raise DataError.
[[nodiscard]] Json read_json_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

}  // namespace behsynth
