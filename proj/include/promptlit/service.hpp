#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "promptlit/assessment.hpp"
#include "promptlit/gateway.hpp"
#include "promptlit/grader.hpp"
#include "promptlit/store.hpp"

namespace promptlit {

enum class Backend : std::uint8_t { Live, Mock };
std::string_view to_string(Backend b);
std::optional<Backend> parse_backend(std::string_view name);

struct ServiceOptions {
  /// Chatbot and grader both use the gateway when Live, local mocks otherwise.
  Backend backend = Backend::Mock;
  GatewayConfig gateway;
  std::string model = "gpt-4o";
  /// Form used for the pre- and post-test.
  std::string test_form = "v2";
};

struct ServiceDeps {
  std::function<Timestamp()> clock;
  std::function<std::string()> new_session_id;
  /// Transport for the live backend; HttpTransport when null.
  std::shared_ptr<Transport> transport;
  Sleeper sleeper;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// HTTP-facing classification of an exception.
struct ApiError {
  int status = 500;
  std::string code;
  std::string message;

  nlohmann::json to_json() const { return {{"error", {{"code", code}, {"message", message}}}}; }
};
ApiError classify_error(const std::exception& e);

/// Session workflow over the store. Every public call either appends the
/// events it implies or throws without changing anything.
class PracticeService {
 public:
  PracticeService(Store& store, std::vector<Scenario> scenarios, ItemBank bank, ServiceOptions options,
                  ServiceDeps deps = {});

  nlohmann::json scenarios_json() const;
  /// Items without answer keys, plus forms, surveys, warm-up and reflection.
  nlohmann::json items_json() const;

  nlohmann::json create_session(const nlohmann::json& body);
  nlohmann::json get_session(const std::string& id) const;
  nlohmann::json submit_survey(const std::string& id, const nlohmann::json& body);
  nlohmann::json submit_test(const std::string& id, const nlohmann::json& body);
  nlohmann::json submit_warmup(const std::string& id, const nlohmann::json& body);
  nlohmann::json submit_prompt(const std::string& id, const nlohmann::json& body);
  nlohmann::json check(const std::string& id);
  nlohmann::json advance(const std::string& id, const nlohmann::json& body);
  nlohmann::json submit_reflection(const std::string& id, const nlohmann::json& body);

  /// CSV export: responses | attempts | grades | labels.
  std::string export_table(const std::string& table) const;
  /// Labels as a JSON document {"labels": [...]} or label CSV text.
  nlohmann::json import_labels(std::string_view body, bool is_csv);
  nlohmann::json analysis() const;

  const std::vector<Scenario>& scenarios() const { return scenarios_; }
  const ItemBank& bank() const { return bank_; }
  const ServiceOptions& options() const { return options_; }

 private:
  std::mutex& session_mutex(const std::string& id);
  SessionState require_session(const std::string& id) const;
  SessionEvent make_event(const SessionState& state, EventKind kind, nlohmann::json payload) const;
  /// Appends and returns the resulting state.
  SessionState append(const SessionState& state, EventKind kind, nlohmann::json payload);
  nlohmann::json view(const SessionState& state) const;
  nlohmann::json scenario_public(const Scenario& s) const;
  const Scenario& current_scenario(const SessionState& state) const;

  Store& store_;
  std::vector<Scenario> scenarios_;
  ItemBank bank_;
  ServiceOptions options_;
  ServiceDeps deps_;
  std::unique_ptr<Gateway> gateway_;
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

}  // namespace promptlit
