#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promptlit/domain.hpp"

namespace promptlit {

/// Number of scenario practices in a session.
inline constexpr int kScenarioCount = 3;

enum class Phase : std::uint8_t { PreSurvey, PreTest, Warmup, Practice, PostTest, PostSurvey, Reflection, Done };
enum class Step : std::uint8_t { ScenarioShown, PromptSubmitted, ResponseShown, Graded };
enum class EventKind : std::uint8_t {
  Started,
  SurveyAnswered,
  TestAnswered,
  WarmupAnswered,
  ScenarioEntered,
  PromptSubmitted,
  ResponseReceived,
  GradeReceived,
  RetryChosen,
  AdvanceChosen,
  ReflectionSubmitted,
};

inline constexpr std::array<EventKind, 11> kAllEventKinds = {
    EventKind::Started,          EventKind::SurveyAnswered,  EventKind::TestAnswered,
    EventKind::WarmupAnswered,   EventKind::ScenarioEntered, EventKind::PromptSubmitted,
    EventKind::ResponseReceived, EventKind::GradeReceived,   EventKind::RetryChosen,
    EventKind::AdvanceChosen,    EventKind::ReflectionSubmitted,
};

std::string_view to_string(Phase p);
std::string_view to_string(Step s);
std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view name);

struct SessionState {
  std::string session_id;
  std::string student_id;
  Phase phase = Phase::PreSurvey;
  int scenario_index = 0;  // meaningful in Practice only
  Step step = Step::ScenarioShown;
  std::array<int, kScenarioCount> attempts{};  // prompts submitted per scenario
  int warmup_answers = 0;
  std::uint64_t next_sequence = 1;

  /// Position in the fixed phase order; never decreases under apply.
  int phase_rank() const;
  std::string describe() const;
  nlohmann::json to_json() const;
  static SessionState from_json(const nlohmann::json& j);

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

struct SessionEvent {
  std::string session_id;
  std::uint64_t sequence_no = 0;
  EventKind kind = EventKind::Started;
  nlohmann::json payload = nlohmann::json::object();
  Timestamp timestamp{};

  nlohmann::json to_json() const;
  static SessionEvent from_json(const nlohmann::json& j);

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

class TransitionError : public Error {
 public:
  enum class Kind { IllegalTransition, SequenceGap, NoStartEvent, InvalidPayload, SessionMismatch };
  TransitionError(Kind kind, std::string message) : Error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct StartedSession {
  SessionState state;
  SessionEvent event;
};

/// Fresh session in PreSurvey together with its Started event (sequence 1).
StartedSession start_session(std::string session_id, std::string student_id, Timestamp at);

/// Whether `kind` may follow `state` (payload aside).
bool is_legal(const SessionState& state, EventKind kind);

/// Next state; the input is never modified.
SessionState apply(const SessionState& state, const SessionEvent& event);

/// Left fold of apply over a log that starts with Started.
SessionState replay(std::span<const SessionEvent> events);

/// Highest-index prompt per scenario id. Attempt indices count the
/// PromptSubmitted events per (session, scenario) in log order.
std::map<std::string, PromptAttempt> last_attempt_per_scenario(std::span<const SessionEvent> events);

}  // namespace promptlit
