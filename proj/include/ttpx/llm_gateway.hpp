#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include "ttpx/error.hpp"

namespace ttpx {

struct LlmRequest {
  std::string model;
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.0;
  int max_tokens = 1024;
};

struct LlmResponse {
  std::string text;
  std::string model;
  bool cached = false;
  std::chrono::milliseconds latency{0};
};

struct CacheKey {
  std::string digest;  // lowercase hex SHA-256

  bool operator==(const CacheKey&) const = default;
};

// SHA-256 over length-prefixed fields (model, system, user, temperature as
// %.17g, max_tokens). Stable across runs and platforms.
CacheKey cache_key(const LlmRequest& request);

enum class GatewayMode { Live, Replay };

std::string_view to_string(GatewayMode mode) noexcept;
GatewayMode parse_gateway_mode(std::string_view text);

class ReplayMiss : public UpstreamError {
 public:
  explicit ReplayMiss(const CacheKey& key)
      : UpstreamError("replay fixture missing for request " + key.digest), key_(key) {}
  const CacheKey& key() const noexcept { return key_; }

 private:
  CacheKey key_;
};

// Failure raised by a transport; `retryable` marks throttling and 5xx-style errors.
class TransportError : public UpstreamError {
 public:
  TransportError(const std::string& what, bool retryable) : UpstreamError(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

class LlmTransport {
 public:
  virtual ~LlmTransport() = default;
  // Returns the completion text or throws TransportError.
  virtual std::string send(const LlmRequest& request) = 0;
};

struct HttpEndpoint {
  std::string base_url;  // e.g. http://localhost:8000
  std::string path = "/v1/chat/completions";
  std::string api_key;
  std::chrono::seconds timeout{120};
};

// OpenAI-style chat completion over HTTP (system + user messages).
class HttpTransport : public LlmTransport {
 public:
  explicit HttpTransport(HttpEndpoint endpoint);
  std::string send(const LlmRequest& request) override;

 private:
  HttpEndpoint endpoint_;
};

inline constexpr const char* kLlmKeyEnv = "ATTCK_EXTRACT_LLM_KEY";

// Reads the credential from ATTCK_EXTRACT_LLM_KEY; throws UsageError if unset.
std::unique_ptr<LlmTransport> make_http_transport(const std::string& base_url, const std::string& path = "/v1/chat/completions");

struct StoredExchange {
  LlmRequest request;
  std::string response_text;
  std::string response_model;
};

// One JSON file per cache key; writes are atomic (temp file + rename).
class FixtureStore {
 public:
  explicit FixtureStore(std::filesystem::path dir);

  std::optional<StoredExchange> get(const CacheKey& key) const;
  void put(const CacheKey& key, const StoredExchange& exchange) const;
  std::filesystem::path path_for(const CacheKey& key) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct GatewayOptions {
  GatewayMode mode = GatewayMode::Replay;
  std::size_t max_in_flight = 4;
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{500};
  // Injected for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleeper;
};

// Thread-safe. LIVE: cache first, then the transport (bounded concurrency,
// exponential backoff), response persisted. REPLAY: store lookup only.
class LlmGateway {
 public:
  LlmGateway(GatewayOptions options, FixtureStore store, std::shared_ptr<LlmTransport> transport = nullptr);

  LlmResponse complete(const LlmRequest& request);

  GatewayMode mode() const noexcept { return options_.mode; }
  std::size_t upstream_calls() const noexcept;

 private:
  std::shared_ptr<std::mutex> key_lock(const std::string& digest);

  GatewayOptions options_;
  FixtureStore store_;
  std::shared_ptr<LlmTransport> transport_;
  std::counting_semaphore<64> slots_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> key_locks_;
  std::size_t upstream_calls_ = 0;
};

void validate_request(const LlmRequest& request);

}  // namespace ttpx
