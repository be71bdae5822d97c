#pragma once
// Random legal session logs and the reference transition table used by the
// practice-flow tests and the acceptance suite.

#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "promptlit/practice_flow.hpp"

namespace flowgen {

using promptlit::EventKind;
using promptlit::Phase;
using promptlit::SessionEvent;
using promptlit::SessionState;
using promptlit::Step;

/// Every reachable (phase, scenario index, step) triple. Non-practice phases
/// use index 0 and step ScenarioShown.
inline std::vector<SessionState> all_states() {
  std::vector<SessionState> out;
  for (Phase p : {Phase::PreSurvey, Phase::PreTest, Phase::Warmup, Phase::Practice, Phase::PostTest,
                  Phase::PostSurvey, Phase::Reflection, Phase::Done}) {
    if (p != Phase::Practice) {
      SessionState s;
      s.session_id = "x";
      s.phase = p;
      s.next_sequence = 5;
      out.push_back(s);
      continue;
    }
    for (int i = 0; i < promptlit::kScenarioCount; ++i) {
      for (Step st : {Step::ScenarioShown, Step::PromptSubmitted, Step::ResponseShown, Step::Graded}) {
        SessionState s;
        s.session_id = "x";
        s.phase = p;
        s.scenario_index = i;
        s.step = st;
        s.next_sequence = 5;
        out.push_back(s);
      }
    }
  }
  return out;
}

/// The transition relation written out as a table, independent of is_legal.
inline bool allowed(const SessionState& s, EventKind k) {
  using E = EventKind;
  static const std::set<std::pair<int, E>> phase_table = {
      {0, E::SurveyAnswered},      {1, E::TestAnswered},   {2, E::WarmupAnswered}, {2, E::ScenarioEntered},
      {4, E::TestAnswered},        {5, E::SurveyAnswered}, {6, E::ReflectionSubmitted},
  };
  static const std::set<std::pair<int, E>> step_table = {
      {0, E::PromptSubmitted}, {1, E::ResponseReceived}, {2, E::GradeReceived}, {2, E::RetryChosen},
      {2, E::AdvanceChosen},   {3, E::RetryChosen},      {3, E::AdvanceChosen},
  };
  if (s.phase == Phase::Practice) return step_table.contains({static_cast<int>(s.step), k});
  return phase_table.contains({static_cast<int>(s.phase), k});
}

inline nlohmann::json payload_for(const SessionState& s, EventKind k, std::mt19937_64& rng) {
  const std::string scenario = "s" + std::to_string(s.scenario_index + 1);
  switch (k) {
    case EventKind::SurveyAnswered:
      return {{"occasion", s.phase == Phase::PreSurvey ? "pre" : "post"}, {"answers", {{"LK1", 1 + rng() % 5}}}};
    case EventKind::TestAnswered:
      return {{"occasion", s.phase == Phase::PreTest ? "pre" : "post"}, {"form", "v2"}, {"answers", nlohmann::json::object()}};
    case EventKind::WarmupAnswered: return {{"item_id", "W1"}, {"choice", rng() % 3}, {"correct", rng() % 2 == 0}};
    case EventKind::PromptSubmitted:
      return {{"scenario_id", scenario}, {"text", "prompt " + std::to_string(rng() % 1000)},
              {"attempt_index", s.attempts[static_cast<std::size_t>(s.scenario_index)] + 1}};
    case EventKind::ResponseReceived: return {{"scenario_id", scenario}, {"response", "ok"}};
    default: return {{"scenario_id", scenario}};
  }
}

/// A legal log starting with Started. Stops at Done or after `max_events`.
inline std::vector<SessionEvent> random_legal_log(std::mt19937_64& rng, std::size_t max_events,
                                                  const std::string& session_id = "sess") {
  using namespace promptlit;
  const Timestamp t0 = parse_timestamp("2025-03-01T10:00:00Z");
  auto started = start_session(session_id, "stu", t0);
  std::vector<SessionEvent> log{started.event};
  SessionState s = started.state;
  while (log.size() < max_events && s.phase != Phase::Done) {
    std::vector<EventKind> options;
    for (EventKind k : kAllEventKinds) {
      if (allowed(s, k)) options.push_back(k);
    }
    // Lean towards progress so logs reach the later phases.
    EventKind k = options[rng() % options.size()];
    if (k == EventKind::RetryChosen && rng() % 3 != 0) k = options.back();
    if (k == EventKind::WarmupAnswered && rng() % 2 == 0) k = EventKind::ScenarioEntered;
    SessionEvent e;
    e.session_id = session_id;
    e.sequence_no = s.next_sequence;
    e.kind = k;
    e.payload = payload_for(s, k, rng);
    e.timestamp = t0 + std::chrono::seconds(log.size());
    s = apply(s, e);
    log.push_back(std::move(e));
  }
  return log;
}

}  // namespace flowgen
