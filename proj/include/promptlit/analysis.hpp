#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promptlit/assessment.hpp"
#include "promptlit/psychometrics.hpp"
#include "promptlit/store.hpp"

namespace promptlit::analysis {

/// Everything a session recorded, decoded from its event log.
struct SessionRecord {
  std::string session_id;
  std::string student_id;
  Timestamp started_at{};
  bool completed = false;
  /// occasion ("pre" | "post") -> form id / answers.
  std::map<std::string, std::string> test_form;
  std::map<std::string, std::map<std::string, Response>> tests;
  std::map<std::string, std::map<std::string, int>> surveys;
  std::vector<std::pair<std::string, bool>> warmup;
  std::vector<PromptAttempt> attempts;
  std::map<AttemptRef, std::string> chatbot_responses;
  std::map<AttemptRef, GradeReport> grades;
  std::map<std::string, std::string> reflections;

  /// Last attempt on `scenario_id`, if any.
  const PromptAttempt* last_attempt(const std::string& scenario_id) const;
};

SessionRecord summarize_session(std::span<const SessionEvent> events, const ItemBank& bank);
std::vector<SessionRecord> summarize_store(const Store& store, const ItemBank& bank);

/// The latest completed session of each student, ordered by student id.
std::vector<SessionRecord> completed_cohort(const std::vector<SessionRecord>& sessions);

// Item analysis ----------------------------------------------------------------

struct ItemsReport {
  std::string form_id;
  std::string source;  // "pre", "post" or a matrix file name
  std::size_t students = 0;
  std::size_t complete_students = 0;
  stats::ItemClassification classification;
  std::optional<double> alpha;
  std::string alpha_note;
};

/// Cohort matrix for one test occasion. OE cells come from human scores.
ResponseMatrix cohort_matrix(const std::vector<SessionRecord>& cohort, const ItemBank& bank,
                             const AssessmentForm& form, const std::string& occasion,
                             const std::vector<Label>& labels);

ItemsReport analyze_items(const ResponseMatrix& matrix, const ItemBank& bank, std::string form_id,
                          std::string source);
nlohmann::json to_json(const ItemsReport& report);
std::string render_text(const ItemsReport& report);

// Grader evaluation --------------------------------------------------------------

struct GraderCorpus {
  std::vector<GradeReport> predicted;
  std::vector<GradeReport> human;
  std::map<Dimension, std::vector<double>> ratings;
};

/// Fixture CSV with header `attempt,dimension,predicted,human,explanation_rating`.
/// predicted/human are 0 or 1; the rating may be empty.
GraderCorpus parse_grader_fixture(std::string_view csv);

/// System grades paired with human grade labels. Only attempts that carry a
/// human label are included.
GraderCorpus grader_corpus(const std::vector<SessionRecord>& sessions, const std::vector<Label>& labels);

struct GraderReport {
  stats::PassFailAccuracy pass_fail;
  std::size_t attempts = 0;
  std::optional<stats::ExplanationAccuracy> explanation;
};

GraderReport analyze_grader(const GraderCorpus& corpus);
nlohmann::json to_json(const GraderReport& report);
/// Dimension columns with pass/fail and explanation accuracy rows.
std::string render_text(const GraderReport& report);

// Learning outcomes ---------------------------------------------------------------

struct DimensionChange {
  Dimension dimension = Dimension::Relevance;
  std::size_t pairs = 0;
  std::uint64_t only_first = 0;   // pass on the first scenario only
  std::uint64_t only_last = 0;    // pass on the last scenario only
  double first_pass_rate = 0;
  double last_pass_rate = 0;
  stats::TestResult test;
};

struct SurveyChange {
  std::string item_id;
  std::size_t pairs = 0;
  double pre_mean = 0;
  double post_mean = 0;
  std::optional<stats::TestResult> test;
  std::string note;
};

struct LearningReport {
  std::size_t students = 0;
  std::string first_scenario;
  std::string last_scenario;
  std::vector<DimensionChange> dimensions;
  std::vector<SurveyChange> surveys;
  std::optional<stats::Correlation> prior_use_vs_first_score;
  std::string correlation_note;
  std::string prior_use_item;
  std::map<std::string, double> test_means;  // occasion -> mean objective score
  std::map<std::string, std::size_t> test_counts;
};

/// Outcomes use human grade labels where present, otherwise the stored grade.
LearningReport analyze_learning(const std::vector<SessionRecord>& cohort, const std::vector<Scenario>& scenarios,
                                const ItemBank& bank, const std::vector<Label>& labels,
                                const std::string& prior_use_item = "LK1");
nlohmann::json to_json(const LearningReport& report);
std::string render_text(const LearningReport& report);

/// Combined report served to operators: items for the given form (pre-test),
/// grader evaluation when human labels exist, and learning outcomes. A
/// section that cannot be computed carries an "error" member instead.
nlohmann::json full_report(const Store& store, const std::vector<Scenario>& scenarios, const ItemBank& bank,
                           const std::string& test_form);

}  // namespace promptlit::analysis
