#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptlit/common.hpp"

namespace promptlit {

/// The six rubric dimensions. Enumerator order is the canonical order used
/// everywhere a dimension set is listed or serialized.
enum class Dimension : std::uint8_t {
  Relevance,
  ClarityOfPurpose,
  Conciseness,
  BackgroundContext,
  RequestElaboration,
  NoDirectAnswer,
};

inline constexpr std::array<Dimension, 6> kAllDimensions = {
    Dimension::Relevance,          Dimension::ClarityOfPurpose,   Dimension::Conciseness,
    Dimension::BackgroundContext,  Dimension::RequestElaboration, Dimension::NoDirectAnswer,
};

std::string_view to_string(Dimension d);
std::optional<Dimension> parse_dimension(std::string_view name);
/// Short column label ("Purpose", "No Answer") used in tabular reports.
std::string_view short_label(Dimension d);
std::string_view general_definition(Dimension d);

enum class LearningObjective : std::uint8_t { AICapacity, ContextsToUseAI, EffectivePromptFormation };

std::string_view to_string(LearningObjective lo);
std::optional<LearningObjective> parse_learning_objective(std::string_view name);

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view iso);

struct Scenario {
  std::string id;
  std::string subject;
  std::string title;
  std::string narrative;
  LearningObjective learning_objective = LearningObjective::EffectivePromptFormation;
  /// Sorted in canonical order, no duplicates.
  std::vector<Dimension> applicable_dimensions;
  /// In-context description per applicable dimension. Falls back to the
  /// general definition when absent.
  std::map<Dimension, std::string> dimension_descriptions;
  std::vector<std::string> topic_terms;

  std::string_view description_of(Dimension d) const;
  bool applies(Dimension d) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Applicable dimensions of a validated scenario, in canonical order.
std::vector<Dimension> scenario_dimensions(const Scenario& scenario);

struct AttemptRef {
  std::string session_id;
  std::string scenario_id;
  int attempt_index = 0;

  std::string key() const;
  friend auto operator<=>(const AttemptRef&, const AttemptRef&) = default;
};

struct PromptAttempt {
  AttemptRef ref;
  std::string prompt_text;
  Timestamp timestamp{};

  friend bool operator==(const PromptAttempt&, const PromptAttempt&) = default;
};

enum class GraderKind : std::uint8_t { Llm, Mock, Human };
std::string_view to_string(GraderKind k);
std::optional<GraderKind> parse_grader_kind(std::string_view name);

struct Verdict {
  bool pass = false;
  std::string explanation;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct GradeReport {
  AttemptRef attempt;
  std::map<Dimension, Verdict> verdicts;
  GraderKind grader_kind = GraderKind::Mock;
  std::string template_version;

  friend bool operator==(const GradeReport&, const GradeReport&) = default;
};

/// Empty when the report satisfies its invariants against `expected`;
/// otherwise one message per violation.
std::vector<std::string> grade_report_violations(const GradeReport& report,
                                                 const std::vector<Dimension>& expected);

struct ValidationError {
  std::string path;
  std::string message;

  std::string to_string() const { return path.empty() ? message : path + ": " + message; }
  friend bool operator==(const ValidationError&, const ValidationError&) = default;
};

/// Value-or-errors result of validating an authored content document.
template <class T>
struct Validated {
  T value{};
  std::vector<ValidationError> errors;

  bool ok() const { return errors.empty(); }
};

/// Parses and validates a scenario bundle document (YAML text).
Validated<std::vector<Scenario>> validate_scenario_config(std::string_view document);
std::string serialize_scenarios(const std::vector<Scenario>& scenarios);

/// Thrown when shipped or operator-supplied content does not validate.
class ContentError : public Error {
 public:
  explicit ContentError(std::vector<ValidationError> errors);
  const std::vector<ValidationError>& errors() const { return errors_; }

 private:
  std::vector<ValidationError> errors_;
};

}  // namespace promptlit
