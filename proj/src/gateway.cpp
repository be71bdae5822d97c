#include "promptlit/gateway.hpp"

#include <httplib.h>

#include <cstdlib>
#include <thread>

namespace promptlit {

using nlohmann::json;

std::string_view to_string(ChatRole r) { return r == ChatRole::System ? "system" : "user"; }

std::string_view to_string(GatewayError::Kind k) {
  switch (k) {
    case GatewayError::Kind::AuthError: return "AuthError";
    case GatewayError::Kind::InvalidRequest: return "InvalidRequest";
    case GatewayError::Kind::RateLimited: return "RateLimited";
    case GatewayError::Kind::Timeout: return "Timeout";
    case GatewayError::Kind::ServerError: return "ServerError";
    case GatewayError::Kind::MalformedResponse: return "MalformedResponse";
  }
  return "ServerError";
}

void ChatRequest::validate() const {
  if (messages.empty()) throw PreconditionError("chat request has no messages");
  if (messages.back().role != ChatRole::User) {
    throw PreconditionError("last chat message must have the user role");
  }
  if (!(temperature >= 0)) throw PreconditionError("temperature must be >= 0");
}

json ChatRequest::to_wire() const {
  json body;
  body["model"] = model_name;
  body["temperature"] = temperature;
  body["messages"] = json::array();
  for (const auto& m : messages) {
    body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  if (response_format == ResponseFormat::Structured) {
    body["response_format"] = {{"type", "json_object"}};
  }
  return body;
}

void GatewayConfig::validate() const {
  if (timeout.count() <= 0) throw PreconditionError("gateway timeout must be positive");
  if (max_retries < 0 || max_retries > 5) throw PreconditionError("max_retries must lie in 0..5");
  if (backoff_base.count() < 0) throw PreconditionError("backoff base must be non-negative");
  if (max_concurrent == 0 || max_concurrent > 1024) {
    throw PreconditionError("max_concurrent must lie in 1..1024");
  }
}

std::string completion_body(std::string_view content) {
  json body = {
      {"object", "chat.completion"},
      {"choices", json::array({{{"index", 0},
                                {"message", {{"role", "assistant"}, {"content", content}}},
                                {"finish_reason", "stop"}}})},
      {"usage", {{"prompt_tokens", 0}, {"completion_tokens", 0}, {"total_tokens", 0}}},
  };
  return body.dump();
}

ChatResponse parse_completion(std::string_view body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw GatewayError(GatewayError::Kind::MalformedResponse, "response body is not a JSON object");
  }
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw GatewayError(GatewayError::Kind::MalformedResponse, "response has no choices");
  }
  const json& first = (*choices)[0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw GatewayError(GatewayError::Kind::MalformedResponse, "response choice has no message content");
  }
  ChatResponse out;
  out.content = first["message"]["content"].get<std::string>();
  out.usage = doc.value("usage", json::object());
  return out;
}

// HttpTransport ---------------------------------------------------------------

TransportReply HttpTransport::post(const json& body, const GatewayConfig& config) {
  const char* key = std::getenv(config.api_key_env_var.c_str());
  if (key == nullptr || *key == '\0') {
    throw GatewayError(GatewayError::Kind::AuthError,
                       "API key environment variable " + config.api_key_env_var + " is not set");
  }
  // Split "https://host[:port]/prefix" into origin and path prefix.
  const std::string& url = config.base_url;
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  client.set_bearer_token_auth(key);

  auto res = client.Post(prefix + "/chat/completions", body.dump(), "application/json");
  TransportReply reply;
  if (!res) {
    const auto err = res.error();
    reply.timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                      err == httplib::Error::ConnectionTimeout;
    reply.error = httplib::to_string(err);
    return reply;
  }
  reply.status = res->status;
  reply.body = res->body;
  return reply;
}

// StubTransport ---------------------------------------------------------------

StubTransport::StubTransport(std::vector<TransportReply> script)
    : script_(script.begin(), script.end()), last_(script.empty() ? ok("") : script.back()) {}

TransportReply StubTransport::post(const json& body, const GatewayConfig&) {
  std::lock_guard lock(mutex_);
  requests_.push_back(body);
  if (script_.empty()) return last_;
  TransportReply next = std::move(script_.front());
  script_.pop_front();
  return next;
}

std::size_t StubTransport::calls() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

std::vector<json> StubTransport::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

TransportReply StubTransport::ok(std::string_view content) { return {200, completion_body(content), false, {}}; }
TransportReply StubTransport::status(int code, std::string body) { return {code, std::move(body), false, {}}; }
TransportReply StubTransport::timeout() { return {0, {}, true, "timed out"}; }

// MockChatTransport -----------------------------------------------------------

TransportReply MockChatTransport::post(const json& body, const GatewayConfig&) {
  std::string subject = "general";
  std::string question;
  for (const auto& m : body.at("messages")) {
    const std::string content = m.at("content").get<std::string>();
    if (m.at("role") == "system") {
      const auto pos = content.find("Subject: ");
      if (pos != std::string::npos) {
        const auto end = content.find('\n', pos);
        subject = content.substr(pos + 9, end == std::string::npos ? std::string::npos : end - pos - 9);
      }
    } else {
      question = content;
    }
  }
  const std::string reply = "[" + subject + "] Thanks for your question (" +
                            std::to_string(text::word_count(question)) +
                            " words). Here is a study-helper answer that builds on what you asked.";
  return {200, completion_body(reply), false, {}};
}

// Gateway ---------------------------------------------------------------------

namespace {
GatewayConfig validated(GatewayConfig config) {
  config.validate();
  return config;
}
}  // namespace

Gateway::Gateway(GatewayConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : config_(validated(std::move(config))),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      slots_(static_cast<std::ptrdiff_t>(config_.max_concurrent)),
      rng_(config_.jitter_seed != 0 ? config_.jitter_seed : std::random_device{}()) {
  if (!transport_) throw PreconditionError("gateway needs a transport");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::chrono::milliseconds Gateway::backoff_delay(int retry) {
  const auto ceiling = config_.backoff_base.count() << std::min(retry, 20);
  const auto floor = ceiling / 2;
  std::lock_guard lock(mutex_);
  const auto span = static_cast<std::uint64_t>(ceiling - floor);
  const auto jitter = span == 0 ? 0 : static_cast<std::int64_t>(rng_() % (span + 1));
  return std::chrono::milliseconds(floor + jitter);
}

std::vector<std::chrono::milliseconds> Gateway::delays() const {
  std::lock_guard lock(mutex_);
  return delays_;
}

ChatResponse Gateway::send_chat(const ChatRequest& request) {
  request.validate();
  const json body = request.to_wire();

  struct SlotGuard {
    std::counting_semaphore<1024>& s;
    explicit SlotGuard(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
    ~SlotGuard() { s.release(); }
  } guard(slots_);

  for (int retry = 0;; ++retry) {
    const TransportReply reply = transport_->post(body, config_);
    GatewayError::Kind kind;
    std::string message;
    if (reply.status >= 200 && reply.status < 300) {
      ChatResponse out = parse_completion(reply.body);
      out.retries = retry;
      return out;
    }
    if (reply.status == 401 || reply.status == 403) {
      throw GatewayError(GatewayError::Kind::AuthError,
                         "endpoint rejected credentials (HTTP " + std::to_string(reply.status) + ")", retry);
    }
    if (reply.status == 429) {
      kind = GatewayError::Kind::RateLimited;
      message = "rate limited (HTTP 429)";
    } else if (reply.status >= 500) {
      kind = GatewayError::Kind::ServerError;
      message = "server error (HTTP " + std::to_string(reply.status) + ")";
    } else if (reply.status >= 400) {
      throw GatewayError(GatewayError::Kind::InvalidRequest,
                         "request rejected (HTTP " + std::to_string(reply.status) + "): " + reply.body, retry);
    } else if (reply.timed_out) {
      kind = GatewayError::Kind::Timeout;
      message = "request timed out";
    } else {
      kind = GatewayError::Kind::ServerError;
      message = "connection failed: " + reply.error;
    }
    if (retry >= config_.max_retries) {
      throw GatewayError(kind, message + " after " + std::to_string(retry) + " retries", retry);
    }
    const auto delay = backoff_delay(retry);
    {
      std::lock_guard lock(mutex_);
      delays_.push_back(delay);
    }
    sleeper_(delay);
  }
}

}  // namespace promptlit
