#include "behsynth/json_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/core.h>

namespace behsynth {

Json to_json(const CodedLabel& value) {
  return Json{{"code", value.code}, {"label", value.label}};
}

Json to_json(const UserProfile& profile) {
  Json j = Json::object();
  for (std::size_t i = 0; i < UserProfile::kAttributeNames.size(); ++i) {
    j[std::string(UserProfile::kAttributeNames[i])] = to_json(profile.attribute(i));
  }
  return j;
}

Json to_json(const Vocabularies& vocab) {
  Json tables = Json::object();
  for (const auto& [name, table] : vocab.profile_tables) {
    Json entries = Json::array();
    for (const auto& e : table) entries.push_back(to_json(e));
    tables[name] = std::move(entries);
  }
  return Json{{"locations", vocab.locations},
              {"intents", vocab.intents},
              {"profile_tables", std::move(tables)}};
}

CodedLabel coded_label_from_json(const Json& j, std::string_view context) {
  if (!j.is_object() || !j.contains("code") || !j["code"].is_string()) {
    throw DataError(fmt::format("{}: expected an object with a string 'code'", context));
  }
  CodedLabel out;
  out.code = j["code"].get<std::string>();
  if (j.contains("label")) {
    if (!j["label"].is_string()) throw DataError(fmt::format("{}: 'label' must be a string", context));
    out.label = j["label"].get<std::string>();
  }
  return out;
}

UserProfile profile_from_json(const Json& j) {
  if (!j.is_object()) throw DataError("profile must be an object");
  UserProfile profile;
  for (std::size_t i = 0; i < UserProfile::kAttributeNames.size(); ++i) {
    const std::string name(UserProfile::kAttributeNames[i]);
    if (!j.contains(name)) throw DataError(fmt::format("profile attribute '{}' missing", name));
    profile.attribute(i) = coded_label_from_json(j[name], "profile." + name);
  }
  return profile;
}

Vocabularies vocabularies_from_json(const Json& j) {
  if (!j.is_object()) throw DataError("vocabulary document must be an object");
  Vocabularies vocab;
  try {
    vocab.locations = j.at("locations").get<std::vector<std::string>>();
    vocab.intents = j.at("intents").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("vocabulary: {}", e.what()));
  }
  if (j.contains("profile_tables")) {
    for (const auto& [name, entries] : j["profile_tables"].items()) {
      if (!entries.is_array()) throw DataError(fmt::format("profile table '{}' must be an array", name));
      auto& table = vocab.profile_tables[name];
      for (const auto& e : entries) table.push_back(coded_label_from_json(e, "profile_tables." + name));
    }
  }
  vocab.check();
  return vocab;
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(fmt::format("{}: malformed JSON: {}", path.string(), e.what()));
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw DataError(fmt::format("write failed for '{}'", path.string()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace behsynth
