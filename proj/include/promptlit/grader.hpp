#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "promptlit/domain.hpp"
#include "promptlit/gateway.hpp"

namespace promptlit {

/// Keys a grading reply must contain for one scenario.
struct GradingSchema {
  std::string scenario_id;
  std::vector<Dimension> expected_keys;
};

GradingSchema make_grading_schema(const Scenario& scenario);

/// Versioned system-prompt template for grading requests.
struct GradingTemplate {
  std::string version;
  std::string text;

  static const GradingTemplate& shipped();
};

class EmptyPromptError : public PreconditionError {
 public:
  EmptyPromptError() : PreconditionError("prompt text is empty") {}
};

class GradeParseError : public Error {
 public:
  enum class Kind { Unparseable, MissingDimension, ExtraDimension, NonBooleanVerdict, EmptyExplanation };
  GradeParseError(Kind kind, std::string key, std::string message)
      : Error(std::move(message)), kind_(kind), key_(std::move(key)) {}
  Kind kind() const { return kind_; }
  /// Offending dimension key; empty for Unparseable.
  const std::string& key() const { return key_; }

 private:
  Kind kind_;
  std::string key_;
};
std::string_view to_string(GradeParseError::Kind k);

class GradingFailed : public Error {
 public:
  GradingFailed(std::string message, int calls) : Error(std::move(message)), calls_(calls) {}
  int calls() const { return calls_; }

 private:
  int calls_;
};

ChatRequest build_grading_request(const Scenario& scenario, std::string_view prompt_text,
                                  const GradingTemplate& tmpl = GradingTemplate::shipped());

/// Validates the structured block inside an assistant reply.
GradeReport parse_grade_report(std::string_view raw, const GradingSchema& schema, GraderKind kind,
                               const AttemptRef& attempt = {}, std::string template_version = {});

/// Renders a report as the fenced JSON block the grader is asked to produce.
std::string render_grade_report(const GradeReport& report);

/// Full report document: attempt, verdicts, grader kind and template version.
nlohmann::json grade_report_to_json(const GradeReport& report);
GradeReport grade_report_from_json(const nlohmann::json& j);

struct GraderOptions {
  /// Follow-up requests after an unusable reply.
  int max_repairs = 2;
  std::string model = "gpt-4o";
  const GradingTemplate* grading_template = nullptr;  // shipped when null
};

/// build -> send -> parse, re-asking with the parse error appended when the
/// reply does not validate. At most 1 + max_repairs gateway calls.
GradeReport grade_prompt(const Scenario& scenario, std::string_view prompt_text, Gateway& gateway,
                         const GraderOptions& options = {}, const AttemptRef& attempt = {});

/// Deterministic keyword rules for offline grading. Not a model of an LLM
/// grader; it exists so the whole pipeline runs without a network.
struct MockRuleTable {
  std::size_t max_words = 60;
  std::vector<std::string> request_verbs;
  std::vector<std::string> context_cues;
  std::vector<std::string> elaboration_cues;
  std::vector<std::string> answer_seeking;

  static MockRuleTable defaults();
};

inline constexpr std::string_view kMockTemplateVersion = "mock-rules-v1";

GradeReport mock_grade(const Scenario& scenario, std::string_view prompt_text,
                       const MockRuleTable& rules = MockRuleTable::defaults(), const AttemptRef& attempt = {});

/// Plain chatbot request: the student's prompt verbatim with a short
/// study-helper system message naming the subject.
ChatRequest build_chat_request(const Scenario& scenario, std::string_view prompt_text);

}  // namespace promptlit
