#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <semaphore>
#include <string>
#include <vector>

#include "promptlit/common.hpp"

namespace promptlit {

enum class ChatRole : std::uint8_t { System, User };
std::string_view to_string(ChatRole r);

struct ChatMessage {
  ChatRole role = ChatRole::User;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

enum class ResponseFormat : std::uint8_t { FreeText, Structured };

struct ChatRequest {
  std::vector<ChatMessage> messages;
  std::string model_name = "gpt-4o";
  ResponseFormat response_format = ResponseFormat::FreeText;
  double temperature = 0.0;

  /// Throws PreconditionError unless messages is non-empty, ends with a user
  /// message and temperature >= 0.
  void validate() const;
  /// Chat-completion wire body.
  nlohmann::json to_wire() const;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct ChatResponse {
  std::string content;
  nlohmann::json usage;
  int retries = 0;
};

struct GatewayConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env_var = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  std::size_t max_concurrent = 8;
  std::uint64_t jitter_seed = 0;  // 0 = seed from std::random_device

  void validate() const;
};

class GatewayError : public Error {
 public:
  enum class Kind { AuthError, InvalidRequest, RateLimited, Timeout, ServerError, MalformedResponse };
  GatewayError(Kind kind, std::string message, int retries = 0)
      : Error(std::move(message)), kind_(kind), retries_(retries) {}
  Kind kind() const { return kind_; }
  int retries() const { return retries_; }

 private:
  Kind kind_;
  int retries_;
};
std::string_view to_string(GatewayError::Kind k);

/// Outcome of a single HTTP exchange.
struct TransportReply {
  int status = 0;
  std::string body;
  bool timed_out = false;
  std::string error;  // connection-level failure text, status == 0
};

/// One HTTP exchange with the chat-completion endpoint.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportReply post(const nlohmann::json& body, const GatewayConfig& config) = 0;
};

/// HTTPS transport against `config.base_url` + "/chat/completions".
class HttpTransport final : public Transport {
 public:
  TransportReply post(const nlohmann::json& body, const GatewayConfig& config) override;
};

/// Scripted replies for tests and offline runs; repeats the last entry once
/// the script is exhausted.
class StubTransport final : public Transport {
 public:
  explicit StubTransport(std::vector<TransportReply> script);
  TransportReply post(const nlohmann::json& body, const GatewayConfig& config) override;

  std::size_t calls() const;
  std::vector<nlohmann::json> requests() const;

  static TransportReply ok(std::string_view content);
  static TransportReply status(int code, std::string body = "{}");
  static TransportReply timeout();

 private:
  mutable std::mutex mutex_;
  std::deque<TransportReply> script_;
  TransportReply last_;
  std::vector<nlohmann::json> requests_;
};

/// Offline chatbot: answers with a canned reply tagged by the subject named
/// in the system message.
class MockChatTransport final : public Transport {
 public:
  TransportReply post(const nlohmann::json& body, const GatewayConfig& config) override;
};

/// Builds a successful chat-completion response body.
std::string completion_body(std::string_view content);

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Sends chat requests with retry, backoff and a concurrency cap.
class Gateway {
 public:
  Gateway(GatewayConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

  /// Retries timeouts, 429 and 5xx up to max_retries; 4xx otherwise fail
  /// immediately.
  ChatResponse send_chat(const ChatRequest& request);

  /// Delay before retry number `retry` (0-based): equal jitter over
  /// [base*2^retry / 2, base*2^retry], so successive delays never decrease.
  std::chrono::milliseconds backoff_delay(int retry);

  const GatewayConfig& config() const { return config_; }
  /// Delays slept so far, in order.
  std::vector<std::chrono::milliseconds> delays() const;

 private:
  GatewayConfig config_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  std::counting_semaphore<1024> slots_;
  mutable std::mutex mutex_;
  std::mt19937_64 rng_;
  std::vector<std::chrono::milliseconds> delays_;
};

/// Extracts choices[0].message.content; throws MalformedResponse.
ChatResponse parse_completion(std::string_view body);

}  // namespace promptlit
