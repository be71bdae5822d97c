#include "promptlit/service.hpp"

#include <random>

#include "promptlit/analysis.hpp"
#include "promptlit/csv.hpp"
#include "promptlit/psychometrics.hpp"

namespace promptlit {

using nlohmann::json;

namespace {

/// Object member `answers`, or an empty object; the reference stays valid.
const json& answers_of(const json& payload) {
  static const json empty = json::object();
  auto it = payload.find("answers");
  return it != payload.end() && it->is_object() ? *it : empty;
}

Timestamp system_now() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

std::function<std::string()> random_ids() {
  auto rng = std::make_shared<std::mt19937_64>(std::random_device{}());
  auto mutex = std::make_shared<std::mutex>();
  return [rng, mutex] {
    std::lock_guard lock(*mutex);
    char buf[32];
    std::snprintf(buf, sizeof buf, "sess-%016llx", static_cast<unsigned long long>((*rng)()));
    return std::string(buf);
  };
}

void require_legal(const SessionState& state, EventKind kind) {
  if (!is_legal(state, kind)) {
    throw TransitionError(TransitionError::Kind::IllegalTransition,
                          std::string(to_string(kind)) + " is not allowed in " + state.describe());
  }
}

const json& require_object(const json& body, const std::string& key) {
  if (!body.is_object() || !body.contains(key) || !body[key].is_object()) {
    throw PreconditionError("request body needs an object member '" + key + "'");
  }
  return body[key];
}

std::string require_string(const json& body, const std::string& key) {
  if (!body.is_object() || !body.contains(key) || !body[key].is_string()) {
    throw PreconditionError("request body needs a string member '" + key + "'");
  }
  return body[key].get<std::string>();
}

std::string cell_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::string_view to_string(Backend b) { return b == Backend::Live ? "live" : "mock"; }

std::optional<Backend> parse_backend(std::string_view name) {
  if (name == "live") return Backend::Live;
  if (name == "mock") return Backend::Mock;
  return std::nullopt;
}

ApiError classify_error(const std::exception& e) {
  ApiError out;
  out.message = e.what();
  if (const auto* s = dynamic_cast<const StoreError*>(&e)) {
    if (s->kind() == StoreError::Kind::UnknownSession) {
      out.status = 404;
      out.code = "not_found";
    } else {
      out.status = 409;
      out.code = "conflict";
    }
  } else if (dynamic_cast<const NotFoundError*>(&e)) {
    out.status = 404;
    out.code = "not_found";
  } else if (dynamic_cast<const TransitionError*>(&e)) {
    out.status = 409;
    out.code = "illegal_transition";
  } else if (dynamic_cast<const GatewayError*>(&e)) {
    out.status = 502;
    out.code = "gateway_failure";
  } else if (dynamic_cast<const GradingFailed*>(&e)) {
    out.status = 503;
    out.code = "grading_unavailable";
  } else if (dynamic_cast<const PreconditionError*>(&e) || dynamic_cast<const AssessmentError*>(&e) ||
             dynamic_cast<const ContentError*>(&e) || dynamic_cast<const json::exception*>(&e)) {
    out.status = 400;
    out.code = "validation";
  } else {
    out.status = 500;
    out.code = "internal";
  }
  return out;
}

PracticeService::PracticeService(Store& store, std::vector<Scenario> scenarios, ItemBank bank,
                                 ServiceOptions options, ServiceDeps deps)
    : store_(store),
      scenarios_(std::move(scenarios)),
      bank_(std::move(bank)),
      options_(std::move(options)),
      deps_(std::move(deps)) {
  if (scenarios_.size() != static_cast<std::size_t>(kScenarioCount)) {
    throw PreconditionError("the practice flow needs exactly " + std::to_string(kScenarioCount) + " scenarios");
  }
  bank_.form(options_.test_form);
  if (!deps_.clock) deps_.clock = system_now;
  if (!deps_.new_session_id) deps_.new_session_id = random_ids();
  std::shared_ptr<Transport> transport;
  GatewayConfig config = options_.gateway;
  if (options_.backend == Backend::Mock) {
    transport = std::make_shared<MockChatTransport>();
    if (config.jitter_seed == 0) config.jitter_seed = 1;
  } else {
    transport = deps_.transport ? deps_.transport : std::make_shared<HttpTransport>();
  }
  gateway_ = std::make_unique<Gateway>(config, transport, deps_.sleeper);
}

std::mutex& PracticeService::session_mutex(const std::string& id) {
  std::lock_guard lock(locks_mutex_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

SessionState PracticeService::require_session(const std::string& id) const {
  auto s = store_.session(id);
  if (!s) throw NotFoundError("unknown session '" + id + "'");
  return *s;
}

SessionEvent PracticeService::make_event(const SessionState& state, EventKind kind, json payload) const {
  SessionEvent e;
  e.session_id = state.session_id;
  e.sequence_no = state.next_sequence;
  e.kind = kind;
  e.payload = std::move(payload);
  e.timestamp = deps_.clock();
  return e;
}

SessionState PracticeService::append(const SessionState& state, EventKind kind, json payload) {
  const SessionEvent e = make_event(state, kind, std::move(payload));
  store_.append_event(e, e.timestamp);
  return require_session(state.session_id);
}

const Scenario& PracticeService::current_scenario(const SessionState& state) const {
  return scenarios_.at(static_cast<std::size_t>(state.scenario_index));
}

json PracticeService::scenario_public(const Scenario& s) const {
  json dims = json::array();
  for (Dimension d : s.applicable_dimensions) {
    dims.push_back({{"id", to_string(d)},
                    {"label", short_label(d)},
                    {"definition", general_definition(d)},
                    {"description", s.description_of(d)}});
  }
  return {{"id", s.id},
          {"subject", s.subject},
          {"title", s.title},
          {"narrative", s.narrative},
          {"learning_objective", to_string(s.learning_objective)},
          {"dimensions", dims}};
}

json PracticeService::scenarios_json() const {
  json out = json::array();
  for (const auto& s : scenarios_) out.push_back(scenario_public(s));
  return out;
}

json PracticeService::items_json() const {
  json items = json::array();
  for (const auto& it : bank_.items) {
    json j = {{"id", it.id},
              {"kind", to_string(it.kind)},
              {"stem", it.stem},
              {"learning_objective", to_string(it.learning_objective)}};
    if (!it.options.empty()) j["options"] = it.options;
    items.push_back(j);
  }
  json forms = json::array();
  for (const auto& f : bank_.forms) forms.push_back({{"id", f.id}, {"version", to_string(f.version)}, {"items", f.item_ids}});
  json warmup = json::array();
  for (const auto& w : bank_.warmup) warmup.push_back({{"id", w.id}, {"stem", w.stem}, {"options", w.options}, {"hint", w.hint}});
  json reflection = json::array();
  for (const auto& r : bank_.reflection) reflection.push_back({{"id", r.id}, {"prompt", r.prompt}});
  return {{"items", items},
          {"forms", forms},
          {"test_form", options_.test_form},
          {"pre_survey", bank_.pre_survey},
          {"post_survey", bank_.post_survey},
          {"warmup", warmup},
          {"reflection", reflection}};
}

json PracticeService::view(const SessionState& state) const {
  json out = state.to_json();
  out["description"] = state.describe();
  json allowed = json::array();
  for (EventKind k : kAllEventKinds) {
    if (k != EventKind::Started && is_legal(state, k)) allowed.push_back(to_string(k));
  }
  out["allowed_events"] = allowed;
  json current = json::object();
  switch (state.phase) {
    case Phase::PreSurvey:
      current = {{"survey", "pre"}, {"items", bank_.pre_survey}};
      break;
    case Phase::PostSurvey:
      current = {{"survey", "post"}, {"items", bank_.post_survey}};
      break;
    case Phase::PreTest:
    case Phase::PostTest:
      current = {{"form", options_.test_form}, {"items", bank_.form(options_.test_form).item_ids}};
      break;
    case Phase::Warmup: {
      json ids = json::array();
      for (const auto& w : bank_.warmup) ids.push_back(w.id);
      current = {{"warmup", ids}, {"answered", state.warmup_answers}};
      break;
    }
    case Phase::Practice: {
      const Scenario& s = current_scenario(state);
      current = {{"scenario", scenario_public(s)}, {"attempts", state.attempts[state.scenario_index]}};
      const auto events = store_.events(state.session_id);
      const auto record = analysis::summarize_session(events, bank_);
      if (const auto* last = record.last_attempt(s.id)) {
        current["last_prompt"] = last->prompt_text;
        if (auto it = record.chatbot_responses.find(last->ref); it != record.chatbot_responses.end()) {
          current["last_response"] = it->second;
        }
        if (auto it = record.grades.find(last->ref); it != record.grades.end()) {
          current["last_grade"] = grade_report_to_json(it->second);
        }
      }
      break;
    }
    case Phase::Reflection: {
      json ids = json::array();
      for (const auto& r : bank_.reflection) ids.push_back(r.id);
      current = {{"prompts", ids}};
      break;
    }
    case Phase::Done:
      break;
  }
  out["current"] = current;
  return out;
}

json PracticeService::create_session(const json& body) {
  const std::string student = text::trim(require_string(body, "student_id"));
  if (student.empty() || student.size() > 64) {
    throw PreconditionError("student_id must be a pseudonymous code of 1 to 64 characters");
  }
  const std::string id = deps_.new_session_id();
  std::lock_guard lock(session_mutex(id));
  auto started = start_session(id, student, deps_.clock());
  store_.append_event(started.event, started.event.timestamp);
  return {{"session_id", id}, {"state", view(require_session(id))}};
}

json PracticeService::get_session(const std::string& id) const { return view(require_session(id)); }

json PracticeService::submit_survey(const std::string& id, const json& body) {
  std::lock_guard lock(session_mutex(id));
  const SessionState state = require_session(id);
  require_legal(state, EventKind::SurveyAnswered);
  const bool pre = state.phase == Phase::PreSurvey;
  const auto& expected = pre ? bank_.pre_survey : bank_.post_survey;
  const json& answers = require_object(body, "answers");
  json stored = json::object();
  for (const auto& [k, v] : answers.items()) {
    if (std::find(expected.begin(), expected.end(), k) == expected.end()) {
      throw PreconditionError("item '" + k + "' is not on the " + (pre ? "pre" : "post") + "-survey");
    }
    stored[k] = response_to_json(response_from_json(bank_.item(k), v));
  }
  for (const auto& k : expected) {
    if (!stored.contains(k)) throw PreconditionError("survey item '" + k + "' is unanswered");
  }
  const auto next = append(state, EventKind::SurveyAnswered, {{"occasion", pre ? "pre" : "post"}, {"answers", stored}});
  return {{"state", view(next)}};
}

json PracticeService::submit_test(const std::string& id, const json& body) {
  std::lock_guard lock(session_mutex(id));
  const SessionState state = require_session(id);
  require_legal(state, EventKind::TestAnswered);
  const std::string occasion = state.phase == Phase::PreTest ? "pre" : "post";
  const auto& form = bank_.form(options_.test_form);
  const json& answers = require_object(body, "answers");
  std::map<std::string, Response> responses;
  json stored = json::object();
  for (const auto& [k, v] : answers.items()) {
    if (std::find(form.item_ids.begin(), form.item_ids.end(), k) == form.item_ids.end()) {
      throw PreconditionError("item '" + k + "' is not on form '" + form.id + "'");
    }
    responses[k] = response_from_json(bank_.item(k), v);
    stored[k] = response_to_json(responses[k]);
  }
  const FormScore score = score_form(form, bank_, responses);
  const auto next = append(state, EventKind::TestAnswered,
                           {{"occasion", occasion},
                            {"form", form.id},
                            {"answers", stored},
                            {"score", score.total},
                            {"max", score.max}});
  return {{"state", view(next)}, {"score", score.total}, {"max", score.max}, {"missing", score.missing}};
}

json PracticeService::submit_warmup(const std::string& id, const json& body) {
  std::lock_guard lock(session_mutex(id));
  const SessionState state = require_session(id);
  require_legal(state, EventKind::WarmupAnswered);
  const std::string item_id = require_string(body, "item_id");
  auto it = std::find_if(bank_.warmup.begin(), bank_.warmup.end(), [&](const auto& w) { return w.id == item_id; });
  if (it == bank_.warmup.end()) throw PreconditionError("unknown warm-up item '" + item_id + "'");
  if (!body.contains("choice") || !body["choice"].is_number_integer() || body["choice"].get<std::int64_t>() < 0 ||
      body["choice"].get<std::uint64_t>() >= it->options.size()) {
    throw PreconditionError("choice must be an option index below " + std::to_string(it->options.size()));
  }
  const std::size_t choice = body["choice"].get<std::size_t>();
  const bool correct = choice == it->correct;
  const auto next =
      append(state, EventKind::WarmupAnswered, {{"item_id", item_id}, {"choice", choice}, {"correct", correct}});
  return {{"state", view(next)}, {"correct", correct}, {"hint", it->hint}, {"feedback", correct ? it->feedback : it->hint}};
}

json PracticeService::submit_prompt(const std::string& id, const json& body) {
  std::lock_guard lock(session_mutex(id));
  const SessionState state = require_session(id);
  require_legal(state, EventKind::PromptSubmitted);
  const std::string text = require_string(body, "text");
  const Scenario& scenario = current_scenario(state);
  ChatRequest request = build_chat_request(scenario, text);
  request.model_name = options_.model;
  // Prompt and reply are recorded together once the chatbot has answered, so
  // a gateway failure leaves the session where it was.
  const ChatResponse reply = gateway_->send_chat(request);
  const int attempt = state.attempts[state.scenario_index] + 1;
  auto next = append(state, EventKind::PromptSubmitted,
                     {{"scenario_id", scenario.id}, {"text", text}, {"attempt_index", attempt}});
  next = append(next, EventKind::ResponseReceived,
                {{"scenario_id", scenario.id}, {"attempt_index", attempt}, {"response", reply.content},
                 {"retries", reply.retries}});
  return {{"state", view(next)},
          {"attempt", {{"session_id", id}, {"scenario_id", scenario.id}, {"attempt_index", attempt}}},
          {"response", reply.content}};
}

json PracticeService::check(const std::string& id) {
  std::lock_guard lock(session_mutex(id));
  const SessionState state = require_session(id);
  require_legal(state, EventKind::GradeReceived);
  const Scenario& scenario = current_scenario(state);
  const auto events = store_.events(id);
  const auto record = analysis::summarize_session(events, bank_);
  const PromptAttempt* last = record.last_attempt(scenario.id);
  if (!last) throw TransitionError(TransitionError::Kind::IllegalTransition, "no prompt to check");
  GradeReport report;
  if (options_.backend == Backend::Mock) {
    report = mock_grade(scenario, last->prompt_text, MockRuleTable::defaults(), last->ref);
  } else {
    GraderOptions go;
    go.model = options_.model;
    report = grade_prompt(scenario, last->prompt_text, *gateway_, go, last->ref);
  }
  const json report_json = grade_report_to_json(report);
  const auto next = append(state, EventKind::GradeReceived, {{"report", report_json}});
  return {{"state", view(next)}, {"report", report_json}};
}

json PracticeService::advance(const std::string& id, const json& body) {
  std::lock_guard lock(session_mutex(id));
  const SessionState state = require_session(id);
  const std::string choice = require_string(body, "choice");
  if (choice != "retry" && choice != "next") throw PreconditionError("choice must be 'retry' or 'next'");
  SessionState next;
  if (state.phase == Phase::Warmup && choice == "next") {
    next = append(state, EventKind::ScenarioEntered, {{"scenario_id", scenarios_.front().id}});
  } else {
    const EventKind kind = choice == "retry" ? EventKind::RetryChosen : EventKind::AdvanceChosen;
    require_legal(state, kind);
    next = append(state, kind, {{"scenario_id", current_scenario(state).id}});
  }
  return {{"state", view(next)}};
}

json PracticeService::submit_reflection(const std::string& id, const json& body) {
  std::lock_guard lock(session_mutex(id));
  const SessionState state = require_session(id);
  require_legal(state, EventKind::ReflectionSubmitted);
  const json& answers = require_object(body, "answers");
  json stored = json::object();
  for (const auto& [k, v] : answers.items()) {
    auto it = std::find_if(bank_.reflection.begin(), bank_.reflection.end(), [&](const auto& r) { return r.id == k; });
    if (it == bank_.reflection.end()) throw PreconditionError("unknown reflection prompt '" + k + "'");
    if (!v.is_string()) throw PreconditionError("reflection answer '" + k + "' must be text");
    stored[k] = v;
  }
  for (const auto& r : bank_.reflection) {
    if (!stored.contains(r.id)) throw PreconditionError("reflection prompt '" + r.id + "' is unanswered");
  }
  const auto next = append(state, EventKind::ReflectionSubmitted, {{"answers", stored}});
  return {{"state", view(next)}};
}

std::string PracticeService::export_table(const std::string& table) const {
  if (table == "labels") return labels_to_csv(store_.labels());
  std::string out;
  if (table == "responses") {
    out = csv::format_row({"session_id", "student_id", "instrument", "occasion", "item_id", "value", "correct"});
  } else if (table == "attempts") {
    out = csv::format_row(
        {"session_id", "student_id", "scenario_id", "attempt_index", "submitted_at", "prompt_text", "response_text"});
  } else if (table == "grades") {
    out = csv::format_row({"session_id", "scenario_id", "attempt_index", "dimension", "pass", "explanation",
                           "grader_kind", "template_version"});
  } else {
    throw PreconditionError("unknown table '" + table + "' (responses, attempts, grades, labels)");
  }

  for (const auto& state : store_.sessions()) {
    const auto events = store_.events(state.session_id);
    const auto record = analysis::summarize_session(events, bank_);
    const std::string& sid = record.session_id;
    const std::string& student = record.student_id;
    if (table == "responses") {
      for (const auto& e : events) {
        const json& p = e.payload;
        if (e.kind == EventKind::SurveyAnswered || e.kind == EventKind::TestAnswered) {
          const bool test = e.kind == EventKind::TestAnswered;
          for (const auto& [k, v] : answers_of(p).items()) {
            std::string correct;
            if (test) {
              const auto* item = bank_.find_item(k);
              if (item && is_objective(item->kind)) {
                correct = score_objective(*item, response_from_json(*item, v)) ? "1" : "0";
              }
            }
            out += csv::format_row({sid, student, test ? "test" : "survey", p.value("occasion", std::string()), k,
                                    cell_text(v), correct});
          }
        } else if (e.kind == EventKind::WarmupAnswered) {
          out += csv::format_row({sid, student, "warmup", "", p.value("item_id", std::string()),
                                  cell_text(p.value("choice", json())), p.value("correct", false) ? "1" : "0"});
        } else if (e.kind == EventKind::ReflectionSubmitted) {
          for (const auto& [k, v] : answers_of(p).items()) {
            out += csv::format_row({sid, student, "reflection", "", k, cell_text(v), ""});
          }
        }
      }
    } else if (table == "attempts") {
      for (const auto& a : record.attempts) {
        auto r = record.chatbot_responses.find(a.ref);
        out += csv::format_row({sid, student, a.ref.scenario_id, std::to_string(a.ref.attempt_index),
                                format_timestamp(a.timestamp), a.prompt_text,
                                r == record.chatbot_responses.end() ? "" : r->second});
      }
    } else {
      for (const auto& [ref, report] : record.grades) {
        for (const auto& [d, v] : report.verdicts) {
          out += csv::format_row({sid, ref.scenario_id, std::to_string(ref.attempt_index), std::string(to_string(d)),
                                  v.pass ? "1" : "0", v.explanation, std::string(to_string(report.grader_kind)),
                                  report.template_version});
        }
      }
    }
  }
  return out;
}

json PracticeService::import_labels(std::string_view body, bool is_csv) {
  std::vector<Label> labels;
  if (is_csv) {
    labels = parse_label_csv(body);
  } else {
    const json doc = json::parse(body);
    if (!doc.is_object() || !doc.contains("labels") || !doc["labels"].is_array()) {
      throw PreconditionError("label document needs a 'labels' array");
    }
    for (const auto& l : doc["labels"]) labels.push_back(label_from_json(l));
  }
  for (const auto& l : labels) {
    const AttemptRef* a = nullptr;
    if (const auto* g = std::get_if<HumanGrade>(&l)) a = &g->attempt;
    if (const auto* r = std::get_if<ExplanationRating>(&l)) {
      a = &r->attempt;
      if (r->rating != 0.0 && r->rating != 0.5 && r->rating != 1.0) {
        throw PreconditionError("explanation ratings must be 1, 0.5 or 0");
      }
    }
    if (a && !store_.session(a->session_id)) {
      throw PreconditionError("label refers to unknown session '" + a->session_id + "'");
    }
  }
  store_.append_labels(labels, deps_.clock());
  return {{"imported", labels.size()}};
}

json PracticeService::analysis() const { return analysis::full_report(store_, scenarios_, bank_, options_.test_form); }

}  // namespace promptlit
