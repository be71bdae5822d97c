#include "promptlit/practice_flow.hpp"

namespace promptlit {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 8> kPhaseNames = {"PreSurvey",  "PreTest",    "Warmup",     "Practice",
                                                         "PostTest",   "PostSurvey", "Reflection", "Done"};
constexpr std::array<std::string_view, 4> kStepNames = {"ScenarioShown", "PromptSubmitted", "ResponseShown",
                                                        "Graded"};
constexpr std::array<std::string_view, 11> kEventNames = {
    "Started",          "SurveyAnswered", "TestAnswered", "WarmupAnswered", "ScenarioEntered",    "PromptSubmitted",
    "ResponseReceived", "GradeReceived",  "RetryChosen",  "AdvanceChosen",  "ReflectionSubmitted"};

template <std::size_t N>
std::size_t index_of(const std::array<std::string_view, N>& names, std::string_view name) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == name) return i;
  }
  return N;
}

TransitionError illegal(const SessionState& s, EventKind k) {
  return TransitionError(TransitionError::Kind::IllegalTransition,
                         "illegal transition: " + std::string(to_string(k)) + " in " + s.describe());
}

}  // namespace

std::string_view to_string(Phase p) { return kPhaseNames[static_cast<std::size_t>(p)]; }
std::string_view to_string(Step s) { return kStepNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(EventKind k) { return kEventNames[static_cast<std::size_t>(k)]; }

std::optional<EventKind> parse_event_kind(std::string_view name) {
  const auto i = index_of(kEventNames, name);
  if (i == kEventNames.size()) return std::nullopt;
  return static_cast<EventKind>(i);
}

int SessionState::phase_rank() const {
  switch (phase) {
    case Phase::PreSurvey: return 0;
    case Phase::PreTest: return 1;
    case Phase::Warmup: return 2;
    case Phase::Practice: return 3 + scenario_index;
    case Phase::PostTest: return 3 + kScenarioCount;
    case Phase::PostSurvey: return 4 + kScenarioCount;
    case Phase::Reflection: return 5 + kScenarioCount;
    case Phase::Done: return 6 + kScenarioCount;
  }
  return 0;
}

std::string SessionState::describe() const {
  if (phase == Phase::Practice) {
    return "Practice(" + std::to_string(scenario_index) + ", " + std::string(to_string(step)) + ")";
  }
  return std::string(to_string(phase));
}

json SessionState::to_json() const {
  json j = {
      {"session_id", session_id},
      {"student_id", student_id},
      {"phase", to_string(phase)},
      {"attempts", attempts},
      {"warmup_answers", warmup_answers},
      {"next_sequence", next_sequence},
  };
  if (phase == Phase::Practice) {
    j["scenario_index"] = scenario_index;
    j["step"] = to_string(step);
  }
  return j;
}

SessionState SessionState::from_json(const json& j) {
  SessionState s;
  s.session_id = j.at("session_id").get<std::string>();
  s.student_id = j.at("student_id").get<std::string>();
  const auto phase = index_of(kPhaseNames, j.at("phase").get<std::string>());
  if (phase == kPhaseNames.size()) throw PreconditionError("unknown phase in session state");
  s.phase = static_cast<Phase>(phase);
  if (s.phase == Phase::Practice) {
    s.scenario_index = j.at("scenario_index").get<int>();
    const auto step = index_of(kStepNames, j.at("step").get<std::string>());
    if (step == kStepNames.size()) throw PreconditionError("unknown step in session state");
    s.step = static_cast<Step>(step);
  }
  s.attempts = j.at("attempts").get<std::array<int, kScenarioCount>>();
  s.warmup_answers = j.at("warmup_answers").get<int>();
  s.next_sequence = j.at("next_sequence").get<std::uint64_t>();
  return s;
}

json SessionEvent::to_json() const {
  return {
      {"session_id", session_id}, {"seq", sequence_no},
      {"kind", to_string(kind)},  {"payload", payload},
      {"ts", format_timestamp(timestamp)},
  };
}

SessionEvent SessionEvent::from_json(const json& j) {
  SessionEvent e;
  e.session_id = j.at("session_id").get<std::string>();
  e.sequence_no = j.at("seq").get<std::uint64_t>();
  const auto kind = parse_event_kind(j.at("kind").get<std::string>());
  if (!kind) throw PreconditionError("unknown event kind '" + j.at("kind").get<std::string>() + "'");
  e.kind = *kind;
  e.payload = j.value("payload", json::object());
  e.timestamp = parse_timestamp(j.at("ts").get<std::string>());
  return e;
}

StartedSession start_session(std::string session_id, std::string student_id, Timestamp at) {
  StartedSession out;
  out.state.session_id = session_id;
  out.state.student_id = student_id;
  out.state.next_sequence = 2;
  out.event.session_id = std::move(session_id);
  out.event.sequence_no = 1;
  out.event.kind = EventKind::Started;
  out.event.payload = {{"student_id", std::move(student_id)}};
  out.event.timestamp = at;
  return out;
}

bool is_legal(const SessionState& s, EventKind k) {
  switch (s.phase) {
    case Phase::PreSurvey: return k == EventKind::SurveyAnswered;
    case Phase::PreTest: return k == EventKind::TestAnswered;
    case Phase::Warmup: return k == EventKind::WarmupAnswered || k == EventKind::ScenarioEntered;
    case Phase::Practice:
      switch (s.step) {
        case Step::ScenarioShown: return k == EventKind::PromptSubmitted;
        case Step::PromptSubmitted: return k == EventKind::ResponseReceived;
        case Step::ResponseShown:
          return k == EventKind::GradeReceived || k == EventKind::RetryChosen || k == EventKind::AdvanceChosen;
        case Step::Graded: return k == EventKind::RetryChosen || k == EventKind::AdvanceChosen;
      }
      return false;
    case Phase::PostTest: return k == EventKind::TestAnswered;
    case Phase::PostSurvey: return k == EventKind::SurveyAnswered;
    case Phase::Reflection: return k == EventKind::ReflectionSubmitted;
    case Phase::Done: return false;
  }
  return false;
}

SessionState apply(const SessionState& state, const SessionEvent& event) {
  if (event.session_id != state.session_id) {
    throw TransitionError(TransitionError::Kind::SessionMismatch,
                          "event for session '" + event.session_id + "' applied to '" + state.session_id + "'");
  }
  if (event.sequence_no != state.next_sequence) {
    throw TransitionError(TransitionError::Kind::SequenceGap,
                          "expected sequence " + std::to_string(state.next_sequence) + ", got " +
                              std::to_string(event.sequence_no));
  }
  if (!is_legal(state, event.kind)) throw illegal(state, event.kind);

  SessionState next = state;
  next.next_sequence += 1;
  switch (event.kind) {
    case EventKind::SurveyAnswered:
      next.phase = state.phase == Phase::PreSurvey ? Phase::PreTest : Phase::Reflection;
      break;
    case EventKind::TestAnswered:
      next.phase = state.phase == Phase::PreTest ? Phase::Warmup : Phase::PostSurvey;
      break;
    case EventKind::WarmupAnswered:
      next.warmup_answers += 1;
      break;
    case EventKind::ScenarioEntered:
      next.phase = Phase::Practice;
      next.scenario_index = 0;
      next.step = Step::ScenarioShown;
      break;
    case EventKind::PromptSubmitted: {
      const auto text = event.payload.is_object() ? event.payload.value("text", std::string()) : std::string();
      if (text::is_blank(text)) {
        throw TransitionError(TransitionError::Kind::InvalidPayload, "PromptSubmitted needs a non-empty text");
      }
      next.step = Step::PromptSubmitted;
      next.attempts[static_cast<std::size_t>(state.scenario_index)] += 1;
      break;
    }
    case EventKind::ResponseReceived:
      next.step = Step::ResponseShown;
      break;
    case EventKind::GradeReceived:
      next.step = Step::Graded;
      break;
    case EventKind::RetryChosen:
      next.step = Step::ScenarioShown;
      break;
    case EventKind::AdvanceChosen:
      if (state.scenario_index + 1 < kScenarioCount) {
        next.scenario_index = state.scenario_index + 1;
        next.step = Step::ScenarioShown;
      } else {
        next.phase = Phase::PostTest;
        next.scenario_index = 0;
        next.step = Step::ScenarioShown;
      }
      break;
    case EventKind::ReflectionSubmitted:
      next.phase = Phase::Done;
      break;
    case EventKind::Started:
      throw illegal(state, event.kind);
  }
  return next;
}

SessionState replay(std::span<const SessionEvent> events) {
  if (events.empty() || events.front().kind != EventKind::Started) {
    throw TransitionError(TransitionError::Kind::NoStartEvent, "event log does not begin with Started");
  }
  const SessionEvent& first = events.front();
  if (first.sequence_no != 1) {
    throw TransitionError(TransitionError::Kind::SequenceGap, "Started must carry sequence 1");
  }
  const std::string student =
      first.payload.is_object() ? first.payload.value("student_id", std::string()) : std::string();
  SessionState state = start_session(first.session_id, student, first.timestamp).state;
  for (const auto& e : events.subspan(1)) state = apply(state, e);
  return state;
}

std::map<std::string, PromptAttempt> last_attempt_per_scenario(std::span<const SessionEvent> events) {
  std::map<std::pair<std::string, std::string>, int> counters;
  std::map<std::string, PromptAttempt> out;
  for (const auto& e : events) {
    if (e.kind != EventKind::PromptSubmitted || !e.payload.is_object()) continue;
    const std::string scenario = e.payload.value("scenario_id", std::string());
    const int index = ++counters[{e.session_id, scenario}];
    auto& slot = out[scenario];
    if (index >= slot.ref.attempt_index) {
      slot.ref = {e.session_id, scenario, index};
      slot.prompt_text = e.payload.value("text", std::string());
      slot.timestamp = e.timestamp;
    }
  }
  return out;
}

}  // namespace promptlit
