#include "promptlit/grader.hpp"

#include <algorithm>
#include <set>

#include "promptlit/content.hpp"

namespace promptlit {

using nlohmann::json;

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string dimension_keys(const std::vector<Dimension>& dims) {
  std::vector<std::string> names;
  for (Dimension d : dims) names.emplace_back(to_string(d));
  return text::join(names, ", ");
}

/// The structured part of an assistant reply: a ```json fence, any fence, or
/// the outermost braces.
std::string extract_block(std::string_view raw) {
  auto fenced = [&](std::string_view opener) -> std::optional<std::string> {
    const auto start = raw.find(opener);
    if (start == std::string_view::npos) return std::nullopt;
    auto body = raw.find('\n', start + opener.size());
    if (body == std::string_view::npos) return std::nullopt;
    const auto end = raw.find("```", body + 1);
    if (end == std::string_view::npos) return std::nullopt;
    return std::string(raw.substr(body + 1, end - body - 1));
  };
  if (auto b = fenced("```json")) return *b;
  if (auto b = fenced("```")) return *b;
  const auto open = raw.find('{');
  const auto close = raw.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return {};
  return std::string(raw.substr(open, close - open + 1));
}

std::vector<std::string> normalized_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : text::tokenize(s)) {
    if (t == "i'm") {
      out.emplace_back("i");
      out.emplace_back("am");
    } else {
      out.push_back(std::move(t));
    }
  }
  return out;
}

/// First phrase from `phrases` that occurs as a contiguous token run.
std::optional<std::string> find_phrase(const std::vector<std::string>& tokens,
                                       const std::vector<std::string>& phrases) {
  for (const auto& phrase : phrases) {
    const auto needle = normalized_tokens(phrase);
    if (needle.empty() || needle.size() > tokens.size()) continue;
    auto it = std::search(tokens.begin(), tokens.end(), needle.begin(), needle.end());
    if (it != tokens.end()) return phrase;
  }
  return std::nullopt;
}

/// First token whose stem matches the stem of some keyword.
std::optional<std::string> find_keyword(const std::vector<std::string>& tokens,
                                        const std::vector<std::string>& keywords) {
  std::set<std::string> stems;
  for (const auto& k : keywords) stems.insert(text::stem(k));
  for (const auto& t : tokens) {
    if (stems.contains(text::stem(t))) return t;
  }
  return std::nullopt;
}

std::string preview(const std::vector<std::string>& words, std::size_t n) {
  std::vector<std::string> head(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(std::min(n, words.size())));
  return text::join(head, ", ");
}

}  // namespace

std::string_view to_string(GradeParseError::Kind k) {
  switch (k) {
    case GradeParseError::Kind::Unparseable: return "Unparseable";
    case GradeParseError::Kind::MissingDimension: return "MissingDimension";
    case GradeParseError::Kind::ExtraDimension: return "ExtraDimension";
    case GradeParseError::Kind::NonBooleanVerdict: return "NonBooleanVerdict";
    case GradeParseError::Kind::EmptyExplanation: return "EmptyExplanation";
  }
  return "Unparseable";
}

GradingSchema make_grading_schema(const Scenario& scenario) {
  return {scenario.id, scenario_dimensions(scenario)};
}

const GradingTemplate& GradingTemplate::shipped() {
  static const GradingTemplate t{std::string(content::kGradingTemplateVersion),
                                 std::string(content::grading_template_text())};
  return t;
}

ChatRequest build_grading_request(const Scenario& scenario, std::string_view prompt_text,
                                  const GradingTemplate& tmpl) {
  if (text::is_blank(prompt_text)) throw EmptyPromptError();
  const auto dims = scenario_dimensions(scenario);

  std::string dimension_block;
  json example = json::object();
  for (Dimension d : dims) {
    dimension_block += "- " + std::string(to_string(d)) + ": " + std::string(general_definition(d)) + "\n";
    dimension_block += "  In this scenario: " + std::string(scenario.description_of(d)) + "\n";
    example[std::string(to_string(d))] = {{"pass", true}, {"explanation", "..."}};
  }
  if (!dimension_block.empty()) dimension_block.pop_back();

  std::string system = tmpl.text;
  replace_all(system, "{{subject}}", scenario.subject);
  replace_all(system, "{{title}}", scenario.title);
  replace_all(system, "{{narrative}}", scenario.narrative);
  replace_all(system, "{{dimensions}}", dimension_block);
  replace_all(system, "{{keys}}", dimension_keys(dims));
  replace_all(system, "{{example}}", example.dump(2));

  ChatRequest req;
  req.messages = {{ChatRole::System, std::move(system)}, {ChatRole::User, std::string(prompt_text)}};
  req.response_format = ResponseFormat::Structured;
  req.temperature = 0.0;
  return req;
}

GradeReport parse_grade_report(std::string_view raw, const GradingSchema& schema, GraderKind kind,
                               const AttemptRef& attempt, std::string template_version) {
  using K = GradeParseError::Kind;
  const std::string block = extract_block(raw);
  json doc = json::parse(block, nullptr, false);
  if (block.empty() || doc.is_discarded() || !doc.is_object()) {
    throw GradeParseError(K::Unparseable, "", "reply does not contain a JSON object");
  }

  std::vector<std::string> keys;
  for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
  for (const auto& key : keys) {
    auto d = parse_dimension(key);
    if (!d || std::find(schema.expected_keys.begin(), schema.expected_keys.end(), *d) ==
                  schema.expected_keys.end()) {
      throw GradeParseError(K::ExtraDimension, key, "unexpected dimension key '" + key + "'");
    }
  }

  GradeReport report;
  report.attempt = attempt;
  report.grader_kind = kind;
  report.template_version = std::move(template_version);
  for (Dimension d : schema.expected_keys) {
    const std::string key(to_string(d));
    if (!doc.contains(key)) {
      throw GradeParseError(K::MissingDimension, key, "missing dimension key '" + key + "'");
    }
    const json& v = doc[key];
    if (!v.is_object() || !v.contains("pass") || !v["pass"].is_boolean()) {
      throw GradeParseError(K::NonBooleanVerdict, key, "verdict for '" + key + "' must have a boolean \"pass\"");
    }
    if (!v.contains("explanation") || !v["explanation"].is_string() ||
        text::is_blank(v["explanation"].get<std::string>())) {
      throw GradeParseError(K::EmptyExplanation, key, "explanation for '" + key + "' is empty");
    }
    report.verdicts[d] = {v["pass"].get<bool>(), text::trim(v["explanation"].get<std::string>())};
  }
  return report;
}

std::string render_grade_report(const GradeReport& report) {
  json doc = json::object();
  for (const auto& [d, v] : report.verdicts) {
    doc[std::string(to_string(d))] = {{"pass", v.pass}, {"explanation", v.explanation}};
  }
  return "```json\n" + doc.dump(2) + "\n```";
}

json grade_report_to_json(const GradeReport& report) {
  json verdicts = json::object();
  for (const auto& [d, v] : report.verdicts) {
    verdicts[std::string(to_string(d))] = {{"pass", v.pass}, {"explanation", v.explanation}};
  }
  return {
      {"attempt",
       {{"session_id", report.attempt.session_id},
        {"scenario_id", report.attempt.scenario_id},
        {"attempt_index", report.attempt.attempt_index}}},
      {"verdicts", verdicts},
      {"grader_kind", to_string(report.grader_kind)},
      {"template_version", report.template_version},
  };
}

GradeReport grade_report_from_json(const json& j) {
  GradeReport r;
  const json& a = j.at("attempt");
  r.attempt = {a.at("session_id").get<std::string>(), a.at("scenario_id").get<std::string>(),
               a.at("attempt_index").get<int>()};
  for (auto it = j.at("verdicts").begin(); it != j.at("verdicts").end(); ++it) {
    auto d = parse_dimension(it.key());
    if (!d) throw PreconditionError("unknown dimension '" + it.key() + "'");
    r.verdicts[*d] = {it.value().at("pass").get<bool>(), it.value().at("explanation").get<std::string>()};
  }
  auto kind = parse_grader_kind(j.at("grader_kind").get<std::string>());
  if (!kind) throw PreconditionError("unknown grader kind");
  r.grader_kind = *kind;
  r.template_version = j.value("template_version", std::string());
  return r;
}

GradeReport grade_prompt(const Scenario& scenario, std::string_view prompt_text, Gateway& gateway,
                         const GraderOptions& options, const AttemptRef& attempt) {
  const GradingTemplate& tmpl = options.grading_template ? *options.grading_template : GradingTemplate::shipped();
  ChatRequest request = build_grading_request(scenario, prompt_text, tmpl);
  request.model_name = options.model;
  const GradingSchema schema = make_grading_schema(scenario);

  const int max_calls = 1 + std::max(0, options.max_repairs);
  std::string last_error;
  for (int call = 1; call <= max_calls; ++call) {
    const ChatResponse reply = gateway.send_chat(request);
    try {
      return parse_grade_report(reply.content, schema, GraderKind::Llm, attempt, tmpl.version);
    } catch (const GradeParseError& e) {
      last_error = std::string(to_string(e.kind())) + ": " + e.what();
      request.messages.push_back(
          {ChatRole::User, "Your previous reply could not be used (" + last_error +
                               "). Reply again with only the fenced JSON object containing exactly the keys: " +
                               dimension_keys(schema.expected_keys) + "."});
    }
  }
  throw GradingFailed("grading failed after " + std::to_string(max_calls) + " calls; last error: " + last_error,
                      max_calls);
}

MockRuleTable MockRuleTable::defaults() {
  MockRuleTable t;
  t.max_words = 60;
  t.request_verbs = {"explain", "teach", "quiz", "help", "list", "describe"};
  t.context_cues = {"I am", "I learned", "my class", "for my"};
  t.elaboration_cues = {"why", "how", "steps", "explain", "example"};
  t.answer_seeking = {"what is the answer", "solve for", "what are x and y", "give me the answer"};
  return t;
}

GradeReport mock_grade(const Scenario& scenario, std::string_view prompt_text, const MockRuleTable& rules,
                       const AttemptRef& attempt) {
  const auto tokens = normalized_tokens(prompt_text);
  const auto topic = find_keyword(tokens, scenario.topic_terms);
  const std::string topic_hint = preview(scenario.topic_terms, 3);

  GradeReport report;
  report.attempt = attempt;
  report.grader_kind = GraderKind::Mock;
  report.template_version = std::string(kMockTemplateVersion);

  for (Dimension d : scenario_dimensions(scenario)) {
    Verdict v;
    switch (d) {
      case Dimension::Relevance:
        v.pass = topic.has_value();
        v.explanation = v.pass ? "The prompt mentions '" + *topic + "', which belongs to this scenario's topic."
                               : "The prompt does not mention the scenario topic (for example " + topic_hint + ").";
        break;
      case Dimension::ClarityOfPurpose: {
        const auto verb = find_keyword(tokens, rules.request_verbs);
        v.pass = verb.has_value() && topic.has_value();
        if (v.pass) {
          v.explanation = "The prompt asks the chatbot to " + *verb + " something specific about '" + *topic + "'.";
        } else if (!verb) {
          v.explanation = "The prompt does not say what kind of help is wanted (try explain, teach, quiz, list, "
                          "describe or help).";
        } else {
          v.explanation = "The prompt asks for help but does not say which part of the topic it is about.";
        }
        break;
      }
      case Dimension::Conciseness: {
        const auto words = text::word_count(prompt_text);
        v.pass = words <= rules.max_words;
        v.explanation = "The prompt has " + std::to_string(words) + " words; the limit is " +
                        std::to_string(rules.max_words) + (v.pass ? "." : ". Try to shorten it.");
        break;
      }
      case Dimension::BackgroundContext: {
        const auto cue = find_phrase(tokens, rules.context_cues);
        v.pass = cue.has_value();
        v.explanation = v.pass ? "The prompt gives background about the student (\"" + *cue + "\")."
                               : "The prompt does not tell the chatbot who is asking or why.";
        break;
      }
      case Dimension::RequestElaboration: {
        const auto cue = find_keyword(tokens, rules.elaboration_cues);
        v.pass = cue.has_value();
        v.explanation = v.pass ? "The prompt asks for elaboration (\"" + *cue + "\")."
                               : "The prompt does not ask for an explanation, steps or examples.";
        break;
      }
      case Dimension::NoDirectAnswer: {
        const auto hit = find_phrase(tokens, rules.answer_seeking);
        v.pass = !hit.has_value();
        v.explanation = v.pass ? "The prompt does not ask for the final answer."
                               : "The prompt asks for the answer directly (\"" + *hit + "\").";
        break;
      }
    }
    report.verdicts.emplace(d, std::move(v));
  }
  return report;
}

ChatRequest build_chat_request(const Scenario& scenario, std::string_view prompt_text) {
  if (text::is_blank(prompt_text)) throw EmptyPromptError();
  ChatRequest req;
  req.messages = {
      {ChatRole::System, "You are a friendly study helper for a secondary school student.\nSubject: " +
                             scenario.subject + "\nAnswer at the student's level and encourage them to think."},
      {ChatRole::User, std::string(prompt_text)},
  };
  req.response_format = ResponseFormat::FreeText;
  req.temperature = 0.7;
  return req;
}

}  // namespace promptlit
