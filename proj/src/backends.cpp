#include "behsynth/backends.hpp"

#include <cstdlib>
#include <iostream>
#include <thread>

#include <fmt/core.h>

#include "httplib.h"

#include "behsynth/json_io.hpp"
#include "behsynth/random.hpp"

namespace behsynth {

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::remote_chat: return "remote_chat";
    case BackendKind::simulator: return "simulator";
    case BackendKind::replay: return "replay";
  }
  return "simulator";
}

BackendKind parse_backend_kind(std::string_view text) {
  if (text == "remote_chat" || text == "remote") return BackendKind::remote_chat;
  if (text == "simulator") return BackendKind::simulator;
  if (text == "replay") return BackendKind::replay;
  throw ConfigError(fmt::format("unknown backend kind '{}'", text));
}

void BackendConfig::check() const {
  if (max_inflight < 1) throw ConfigError("max_inflight must be >= 1");
  switch (kind) {
    case BackendKind::remote_chat:
      if (endpoint_url.empty()) throw ConfigError("remote backend requires endpoint_url");
      if (model_name.empty()) throw ConfigError("remote backend requires model_name");
      if (api_key_env_var.empty()) throw ConfigError("remote backend requires api_key_env_var");
      if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
      break;
    case BackendKind::replay:
      if (replay_path.empty()) throw ConfigError("replay backend requires replay_path");
      break;
    case BackendKind::simulator:
      sim_config.check();
      break;
  }
}

// --- FairThrottle ----------------------------------------------------------

FairThrottle::FairThrottle(std::size_t limit) : limit_(limit) {
  if (limit_ == 0) throw ConfigError("throttle limit must be >= 1");
}

FairThrottle::Permit FairThrottle::acquire() {
  std::unique_lock lock(mutex_);
  const std::uint64_t ticket = next_ticket_++;
  if (ticket != now_serving_ || inflight_ >= limit_) ++waits_;
  cv_.wait(lock, [&] { return ticket == now_serving_ && inflight_ < limit_; });
  ++now_serving_;
  ++inflight_;
  peak_ = std::max(peak_, inflight_);
  // The next ticket holder may be admissible right away.
  cv_.notify_all();
  return Permit(this);
}

void FairThrottle::release() {
  {
    std::lock_guard lock(mutex_);
    --inflight_;
  }
  cv_.notify_all();
}

std::size_t FairThrottle::peak_inflight() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

std::size_t FairThrottle::waits() const {
  std::lock_guard lock(mutex_);
  return waits_;
}

// --- Replay ----------------------------------------------------------------

ReplayBackend::ReplayBackend(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      queues_[{j.at("user_id").get<std::string>(), j.at("segment_index").get<int>()}].push_back(
          j.at("response").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("{}:{}: bad replay record: {}", path.string(), line_no, e.what()));
    }
  }
}

ReplayBackend::ReplayBackend(std::vector<std::tuple<std::string, int, std::string>> records) {
  for (auto& [user, segment, response] : records) {
    queues_[{user, segment}].push_back(std::move(response));
  }
}

std::string ReplayBackend::complete(const CompletionRequest& request) {
  std::lock_guard lock(mutex_);
  auto it = queues_.find({request.user_id, request.segment_index});
  if (it == queues_.end() || it->second.empty()) {
    throw BackendError(fmt::format("replay exhausted for user '{}' segment {}", request.user_id,
                                   request.segment_index));
  }
  std::string out = std::move(it->second.front());
  it->second.pop_front();
  served_.push_back(std::chrono::steady_clock::now());
  return out;
}

std::vector<std::chrono::steady_clock::time_point> ReplayBackend::served_at() const {
  std::lock_guard lock(mutex_);
  return served_;
}

std::string replay_record_line(const std::string& user_id, int segment_index,
                               const std::string& response) {
  return Json{{"user_id", user_id}, {"segment_index", segment_index}, {"response", response}}.dump();
}

// --- Simulator ---------------------------------------------------------------

SimulatorBackend::SimulatorBackend(SimConfig cfg, std::map<std::string, std::uint64_t> user_seeds)
    : cfg_(std::move(cfg)), user_seeds_(std::move(user_seeds)) {
  cfg_.check();
}

std::string SimulatorBackend::complete(const CompletionRequest& request) {
  SimConfig cfg = cfg_;
  auto it = user_seeds_.find(request.user_id);
  cfg.seed = it != user_seeds_.end() ? it->second : (cfg_.seed ^ fnv1a_64(request.user_id));
  cfg.weeks = 1;
  cfg.first_week = request.segment_index;
  cfg.template_shift = 1 + static_cast<std::uint64_t>(request.run);
  try {
    const auto seq = simulate_user(request.profile, cfg, request.user_id);
    return serialize_events(seq.events);
  } catch (const ConfigError& e) {
    throw BackendError(fmt::format("simulator backend: {}", e.what()));
  }
}

// --- Remote ------------------------------------------------------------------

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError(fmt::format("endpoint '{}' lacks a scheme", url));
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

RemoteChatBackend::RemoteChatBackend(const BackendConfig& cfg) : cfg_(cfg) {
  cfg_.check();
  const char* key = std::getenv(cfg_.api_key_env_var.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError(fmt::format("environment variable '{}' holding the API key is not set",
                                  cfg_.api_key_env_var));
  }
  api_key_ = key;
  std::tie(scheme_host_port_, path_) = split_url(cfg_.endpoint_url);
}

std::string RemoteChatBackend::request_body(const BackendConfig& cfg, const PromptBundle& bundle) {
  const Json body{{"model", cfg.model_name},
                  {"temperature", cfg.temperature},
                  {"messages", Json::array({Json{{"role", "system"}, {"content", bundle.system_text}},
                                            Json{{"role", "user"}, {"content", bundle.user_text}}})}};
  return body.dump();
}

std::string RemoteChatBackend::extract_content(const std::string& response_body) {
  try {
    const Json j = Json::parse(response_body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(fmt::format("unexpected chat-completion response: {}", e.what()));
  }
}

std::string RemoteChatBackend::complete(const CompletionRequest& request) {
  httplib::Client client(scheme_host_port_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(cfg_.request_timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.request_timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  client.set_bearer_token_auth(api_key_);

  const std::string body = request_body(cfg_, request.bundle);
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.transport_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(cfg_.retry_backoff * (1 << (attempt - 1)));
    auto res = client.Post(path_, body, "application/json");
    if (!res) {
      last_error = fmt::format("transport error: {}", httplib::to_string(res.error()));
      continue;
    }
    if (res->status >= 200 && res->status < 300) return extract_content(res->body);
    std::cerr << "chat endpoint returned HTTP " << res->status << ": " << res->body << '\n';
    last_error = fmt::format("HTTP {}: {}", res->status, res->body);
    // Only throttling and server-side errors are worth retrying.
    if (res->status != 429 && res->status < 500) break;
  }
  throw BackendError(fmt::format("chat completion for user '{}' segment {} failed: {}",
                                 request.user_id, request.segment_index, last_error));
}

// --- Throttled ---------------------------------------------------------------

ThrottledBackend::ThrottledBackend(std::unique_ptr<GeneratorBackend> inner, std::size_t limit)
    : inner_(std::move(inner)), throttle_(limit) {}

std::string ThrottledBackend::complete(const CompletionRequest& request) {
  auto permit = throttle_.acquire();
  return inner_->complete(request);
}

std::unique_ptr<GeneratorBackend> make_backend(const BackendConfig& cfg) {
  cfg.check();
  switch (cfg.kind) {
    case BackendKind::remote_chat:
      return std::make_unique<ThrottledBackend>(std::make_unique<RemoteChatBackend>(cfg),
                                                cfg.max_inflight);
    case BackendKind::replay:
      return std::make_unique<ReplayBackend>(cfg.replay_path);
    case BackendKind::simulator:
      return std::make_unique<SimulatorBackend>(cfg.sim_config, cfg.user_seeds);
  }
  throw ConfigError("unknown backend kind");
}

}  // namespace behsynth
