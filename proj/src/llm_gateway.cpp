#include "ttpx/llm_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "ttpx/io.hpp"

namespace ttpx {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0f]);
  }
  return out;
}

void append_field(std::string& out, std::string_view field) {
  out += std::to_string(field.size());
  out += ':';
  out.append(field);
  out += ';';
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

json request_to_json(const LlmRequest& r) {
  return json{{"model", r.model},
              {"system_prompt", r.system_prompt},
              {"user_prompt", r.user_prompt},
              {"temperature", r.temperature},
              {"max_tokens", r.max_tokens}};
}

LlmRequest request_from_json(const json& j) {
  LlmRequest r;
  r.model = j.at("model").get<std::string>();
  r.system_prompt = j.at("system_prompt").get<std::string>();
  r.user_prompt = j.at("user_prompt").get<std::string>();
  r.temperature = j.at("temperature").get<double>();
  r.max_tokens = j.at("max_tokens").get<int>();
  return r;
}

}  // namespace

CacheKey cache_key(const LlmRequest& request) {
  std::string canonical = "ttpx-llm-v1;";
  append_field(canonical, request.model);
  append_field(canonical, request.system_prompt);
  append_field(canonical, request.user_prompt);
  append_field(canonical, format_double(request.temperature));
  append_field(canonical, std::to_string(request.max_tokens));
  return CacheKey{sha256_hex(canonical)};
}

std::string_view to_string(GatewayMode mode) noexcept { return mode == GatewayMode::Live ? "LIVE" : "REPLAY"; }

GatewayMode parse_gateway_mode(std::string_view text) {
  const auto lowered = io::to_lower_ascii(io::trim(text));
  if (lowered == "live") return GatewayMode::Live;
  if (lowered == "replay") return GatewayMode::Replay;
  throw UsageError("unknown gateway mode '" + std::string(text) + "' (expected LIVE or REPLAY)");
}

void validate_request(const LlmRequest& request) {
  if (request.model.empty()) throw UsageError("LLM request has no model");
  if (request.system_prompt.empty() || request.user_prompt.empty()) throw UsageError("LLM request prompts must be non-empty");
  if (!(request.temperature >= 0.0) || !std::isfinite(request.temperature)) {
    throw UsageError("LLM request temperature must be >= 0");
  }
  if (request.max_tokens <= 0) throw UsageError("LLM request max_tokens must be positive");
}

HttpTransport::HttpTransport(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpTransport::send(const LlmRequest& request) {
  httplib::Client client(endpoint_.base_url);
  client.set_connection_timeout(endpoint_.timeout);
  client.set_read_timeout(endpoint_.timeout);
  client.set_write_timeout(endpoint_.timeout);

  const json body{{"model", request.model},
                  {"messages",
                   json::array({json{{"role", "system"}, {"content", request.system_prompt}},
                                json{{"role", "user"}, {"content", request.user_prompt}}})},
                  {"temperature", request.temperature},
                  {"max_tokens", request.max_tokens}};
  httplib::Headers headers;
  if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

  auto result = client.Post(endpoint_.path, headers, body.dump(), "application/json");
  if (!result) {
    throw TransportError("LLM endpoint " + endpoint_.base_url + " unreachable: " + httplib::to_string(result.error()),
                         true);
  }
  const int status = result->status;
  if (status == 429 || status >= 500) {
    throw TransportError("LLM endpoint returned HTTP " + std::to_string(status), true);
  }
  if (status != 200) throw TransportError("LLM endpoint returned HTTP " + std::to_string(status), false);
  try {
    const auto parsed = json::parse(result->body);
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed chat-completion response: ") + e.what(), false);
  }
}

std::unique_ptr<LlmTransport> make_http_transport(const std::string& base_url, const std::string& path) {
  const char* key = std::getenv(kLlmKeyEnv);
  if (key == nullptr || *key == '\0') {
    throw UsageError(std::string("LIVE mode requires the ") + kLlmKeyEnv + " environment variable");
  }
  if (base_url.empty()) throw UsageError("LIVE mode requires an LLM endpoint URL");
  return std::make_unique<HttpTransport>(HttpEndpoint{base_url, path, key, std::chrono::seconds{120}});
}

FixtureStore::FixtureStore(fs::path dir) : dir_(std::move(dir)) {}

fs::path FixtureStore::path_for(const CacheKey& key) const { return dir_ / (key.digest + ".json"); }

std::optional<StoredExchange> FixtureStore::get(const CacheKey& key) const {
  const auto path = path_for(key);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return std::nullopt;
  try {
    const auto record = json::parse(io::read_text_file(path));
    StoredExchange exchange;
    exchange.request = request_from_json(record.at("request"));
    exchange.response_text = record.at("response").at("text").get<std::string>();
    exchange.response_model = record.at("response").value("model", exchange.request.model);
    if (cache_key(exchange.request) != key) throw DataError(path.string() + ": stored request does not hash to its key");
    return exchange;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed fixture: " + e.what());
  }
}

void FixtureStore::put(const CacheKey& key, const StoredExchange& exchange) const {
  json record;
  record["key"] = key.digest;
  record["request"] = request_to_json(exchange.request);
  record["response"] = json{{"text", exchange.response_text}, {"model", exchange.response_model}};
  io::write_file_atomic(path_for(key), record.dump(2) + "\n");
}

LlmGateway::LlmGateway(GatewayOptions options, FixtureStore store, std::shared_ptr<LlmTransport> transport)
    : options_(std::move(options)),
      store_(std::move(store)),
      transport_(std::move(transport)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options_.max_in_flight, 1, 64))) {
  if (!options_.sleeper) {
    options_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  if (options_.mode == GatewayMode::Live && !transport_) throw UsageError("LIVE gateway requires a transport");
}

std::size_t LlmGateway::upstream_calls() const noexcept {
  std::lock_guard lock(mutex_);
  return upstream_calls_;
}

std::shared_ptr<std::mutex> LlmGateway::key_lock(const std::string& digest) {
  std::lock_guard lock(mutex_);
  auto& slot = key_locks_[digest];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

LlmResponse LlmGateway::complete(const LlmRequest& request) {
  validate_request(request);
  const auto started = std::chrono::steady_clock::now();
  const CacheKey key = cache_key(request);
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  };

  if (options_.mode == GatewayMode::Replay) {
    auto stored = store_.get(key);
    if (!stored) throw ReplayMiss(key);
    return LlmResponse{stored->response_text, stored->response_model, true, elapsed()};
  }

  // One writer per key: concurrent identical requests trigger a single call.
  const auto lock = key_lock(key.digest);
  std::lock_guard key_guard(*lock);
  if (auto stored = store_.get(key)) {
    return LlmResponse{stored->response_text, stored->response_model, true, elapsed()};
  }

  std::string text;
  auto backoff = options_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    slots_.acquire();
    try {
      {
        std::lock_guard count_guard(mutex_);
        ++upstream_calls_;
      }
      text = transport_->send(request);
      slots_.release();
      break;
    } catch (const TransportError& e) {
      slots_.release();
      if (!e.retryable() || attempt >= options_.max_retries) {
        throw UpstreamError(std::string(e.what()) + " (after " + std::to_string(attempt + 1) + " attempt(s))");
      }
    } catch (...) {
      slots_.release();
      throw;
    }
    options_.sleeper(backoff);
    backoff *= 2;
  }

  store_.put(key, StoredExchange{request, text, request.model});
  return LlmResponse{std::move(text), request.model, false, elapsed()};
}

}  // namespace ttpx
