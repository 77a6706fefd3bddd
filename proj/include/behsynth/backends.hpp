#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "behsynth/core.hpp"
#include "behsynth/prompt.hpp"
#include "behsynth/simgen.hpp"

namespace behsynth {

struct CompletionRequest {
  PromptBundle bundle;
  std::string user_id;
  UserProfile profile;
  int run = 0;
  int segment_index = 0;
  int attempt = 0;
};

/// A text generator. Implementations must be safe for concurrent calls.
class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;

  /// Returns the raw response text. Throws BackendError on transport failure.
  virtual std::string complete(const CompletionRequest& request) = 0;
};

enum class BackendKind { remote_chat, simulator, replay };

[[nodiscard]] std::string_view to_string(BackendKind kind);
[[nodiscard]] BackendKind parse_backend_kind(std::string_view text);

struct BackendConfig {
  BackendKind kind = BackendKind::simulator;
  std::string endpoint_url;
  std::string model_name = "gpt-4o-2024-0806";
  std::string api_key_env_var;
  double temperature = 0.7;
  std::chrono::milliseconds request_timeout{60'000};
  std::size_t max_inflight = 4;
  int transport_retries = 3;
  std::chrono::milliseconds retry_backoff{500};
  std::filesystem::path replay_path;
  SimConfig sim_config;
  /// Seed of the real user each synthetic user mirrors (simulator backend).
  std::map<std::string, std::uint64_t> user_seeds;

  /// Throws ConfigError when a field required by `kind` is missing.
  void check() const;
};

/// FIFO admission gate bounding concurrent work. Waiters are admitted in
/// arrival order.
class FairThrottle {
 public:
  explicit FairThrottle(std::size_t limit);

  class Permit {
   public:
    explicit Permit(FairThrottle* owner) : owner_(owner) {}
    Permit(Permit&& other) noexcept : owner_(std::exchange(other.owner_, nullptr)) {}
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    Permit& operator=(Permit&&) = delete;
    ~Permit() {
      if (owner_ != nullptr) owner_->release();
    }

   private:
    FairThrottle* owner_;
  };

  [[nodiscard]] Permit acquire();

  [[nodiscard]] std::size_t peak_inflight() const;
  [[nodiscard]] std::size_t limit() const { return limit_; }
  /// Number of acquisitions that had to wait.
  [[nodiscard]] std::size_t waits() const;

 private:
  void release();

  const std::size_t limit_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t now_serving_ = 0;
  std::size_t inflight_ = 0;
  std::size_t peak_ = 0;
  std::size_t waits_ = 0;
};

/// Canned responses keyed by (user_id, segment_index), served in file order.
/// File: JSON lines {"user_id": ..., "segment_index": ..., "response": ...}.
class ReplayBackend final : public GeneratorBackend {
 public:
  explicit ReplayBackend(const std::filesystem::path& path);
  ReplayBackend(std::vector<std::tuple<std::string, int, std::string>> records);

  std::string complete(const CompletionRequest& request) override;

  /// Times at which each response was handed out (for throttle inspection).
  [[nodiscard]] std::vector<std::chrono::steady_clock::time_point> served_at() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, int>, std::deque<std::string>> queues_;
  std::vector<std::chrono::steady_clock::time_point> served_;
};

/// Writes a replay file line.
[[nodiscard]] std::string replay_record_line(const std::string& user_id, int segment_index,
                                             const std::string& response);

/// Offline generator: re-simulates the requested user with a shifted template
/// seed, emitting one week in the line grammar.
class SimulatorBackend final : public GeneratorBackend {
 public:
  SimulatorBackend(SimConfig cfg, std::map<std::string, std::uint64_t> user_seeds);

  std::string complete(const CompletionRequest& request) override;

 private:
  SimConfig cfg_;
  std::map<std::string, std::uint64_t> user_seeds_;
};

/// Chat-completion client: POSTs {"model", "temperature", "messages": [system,
/// user]} with a bearer key and returns choices[0].message.content.
class RemoteChatBackend final : public GeneratorBackend {
 public:
  /// Resolves the key from the environment; throws ConfigError if unset.
  explicit RemoteChatBackend(const BackendConfig& cfg);

  std::string complete(const CompletionRequest& request) override;

  [[nodiscard]] static std::string request_body(const BackendConfig& cfg, const PromptBundle& bundle);
  /// Extracts the first candidate's content; throws BackendError otherwise.
  [[nodiscard]] static std::string extract_content(const std::string& response_body);

 private:
  BackendConfig cfg_;
  std::string api_key_;
  std::string scheme_host_port_;
  std::string path_;
};

/// Bounds concurrent calls into an inner backend.
class ThrottledBackend final : public GeneratorBackend {
 public:
  ThrottledBackend(std::unique_ptr<GeneratorBackend> inner, std::size_t limit);

  std::string complete(const CompletionRequest& request) override;
  [[nodiscard]] const FairThrottle& throttle() const { return throttle_; }

 private:
  std::unique_ptr<GeneratorBackend> inner_;
  FairThrottle throttle_;
};

/// Builds the configured backend. Remote backends are wrapped in a throttle of
/// `max_inflight`.
[[nodiscard]] std::unique_ptr<GeneratorBackend> make_backend(const BackendConfig& cfg);

}  // namespace behsynth
