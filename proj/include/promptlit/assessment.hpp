#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "promptlit/domain.hpp"

namespace promptlit {

enum class ItemKind : std::uint8_t { MCQ, TF, OE, Likert5 };
std::string_view to_string(ItemKind k);
std::optional<ItemKind> parse_item_kind(std::string_view name);
inline bool is_objective(ItemKind k) { return k == ItemKind::MCQ || k == ItemKind::TF; }

enum class Abstraction : std::uint8_t { ConcreteScenario, Abstract };
std::string_view to_string(Abstraction a);

struct AssessmentItem {
  std::string id;
  ItemKind kind = ItemKind::MCQ;
  std::string stem;
  std::vector<std::string> options;  // MCQ only
  /// MCQ: zero-based option index. TF: the true/false key. Absent otherwise.
  std::variant<std::monostate, std::size_t, bool> correct;
  LearningObjective learning_objective = LearningObjective::AICapacity;
  Abstraction abstraction = Abstraction::Abstract;

  friend bool operator==(const AssessmentItem&, const AssessmentItem&) = default;
};

enum class FormVersion : std::uint8_t { OriginalV1, IteratedV2 };
std::string_view to_string(FormVersion v);

struct AssessmentForm {
  std::string id;
  FormVersion version = FormVersion::OriginalV1;
  std::vector<std::string> item_ids;
};

struct WarmupItem {
  std::string id;
  std::string stem;
  std::vector<std::string> options;
  std::size_t correct = 0;
  std::string hint;
  std::string feedback;
};

struct ReflectionPrompt {
  std::string id;
  std::string prompt;
};

/// Items, forms, surveys, warm-up and reflection content.
struct ItemBank {
  std::vector<AssessmentItem> items;
  std::vector<AssessmentForm> forms;
  std::vector<std::string> pre_survey;
  std::vector<std::string> post_survey;
  std::vector<WarmupItem> warmup;
  std::vector<ReflectionPrompt> reflection;

  const AssessmentItem* find_item(std::string_view id) const;
  const AssessmentForm* find_form(std::string_view id) const;
  const AssessmentItem& item(std::string_view id) const;
  const AssessmentForm& form(std::string_view id) const;
  /// Learning objective of every item on the form, in form order.
  std::vector<std::pair<std::string, LearningObjective>> lo_mapping(const AssessmentForm& form) const;
};

Validated<ItemBank> validate_item_bank(std::string_view document);

// Responses ----------------------------------------------------------------

struct ChoiceResponse {
  std::size_t index = 0;
  friend bool operator==(const ChoiceResponse&, const ChoiceResponse&) = default;
};
struct TruthResponse {
  bool value = false;
  friend bool operator==(const TruthResponse&, const TruthResponse&) = default;
};
struct TextResponse {
  std::string text;
  friend bool operator==(const TextResponse&, const TextResponse&) = default;
};
struct LikertResponse {
  int value = 3;
  friend bool operator==(const LikertResponse&, const LikertResponse&) = default;
};

using Response = std::variant<ChoiceResponse, TruthResponse, TextResponse, LikertResponse>;
std::string describe(const Response& r);

class AssessmentError : public Error {
 public:
  enum class Kind { KindMismatch, InvalidResponse, UnknownItem, OutOfRange };
  AssessmentError(Kind kind, std::string message) : Error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// JSON form of an answer: MCQ option index, TF boolean, OE text, Likert 1..5.
/// Throws AssessmentError(InvalidResponse) when the value does not fit the item.
Response response_from_json(const AssessmentItem& item, const nlohmann::json& value);
nlohmann::json response_to_json(const Response& r);

/// 1 iff the response matches the key. Only MCQ and TF items are scorable.
int score_objective(const AssessmentItem& item, const Response& response);

struct FormScore {
  double total = 0;
  double max = 0;
  std::map<LearningObjective, double> per_objective;
  std::vector<std::string> missing;
};

/// Sum of objective item scores. Missing items count 0 and are listed.
FormScore score_form(const AssessmentForm& form, const ItemBank& bank,
                     const std::map<std::string, Response>& responses);

/// Signed post - pre change on a 5-point scale.
int likert_delta(int pre, int post);

// Response matrix -----------------------------------------------------------

enum class Cell : std::uint8_t { Wrong = 0, Right = 1, Missing = 2 };

/// Students x items binary score table.
class ResponseMatrix {
 public:
  ResponseMatrix() = default;
  ResponseMatrix(std::vector<std::string> students, std::vector<std::string> items);

  std::size_t rows() const { return students_.size(); }
  std::size_t cols() const { return items_.size(); }
  const std::vector<std::string>& students() const { return students_; }
  const std::vector<std::string>& items() const { return items_; }

  Cell at(std::size_t row, std::size_t col) const { return cells_[row * cols() + col]; }
  void set(std::size_t row, std::size_t col, Cell v) { cells_[row * cols() + col] = v; }
  std::vector<Cell> column(std::size_t col) const;
  std::optional<std::size_t> column_index(std::string_view item) const;

  /// Sum of Right cells per student.
  std::vector<int> totals() const;
  bool has_missing() const;
  /// Copy keeping only students with no missing cell.
  ResponseMatrix complete_rows() const;
  /// Copy keeping only the given columns, in the given order.
  ResponseMatrix select_items(const std::vector<std::string>& items) const;

  friend bool operator==(const ResponseMatrix&, const ResponseMatrix&) = default;

 private:
  std::vector<std::string> students_;
  std::vector<std::string> items_;
  std::vector<Cell> cells_;
};

struct StudentResponses {
  std::string student_id;
  std::map<std::string, Response> responses;
};

/// Human 0/1 scores for open-ended items, keyed by (student id, item id).
using OpenEndedScores = std::map<std::pair<std::string, std::string>, int>;

/// Rows follow `cohort` order. Columns are the form's objective items in
/// form order; an OE item becomes a column only when at least one human
/// score for it is supplied.
ResponseMatrix build_response_matrix(const AssessmentForm& form, const ItemBank& bank,
                                     const std::vector<StudentResponses>& cohort,
                                     const OpenEndedScores& oe_scores = {});

/// Matrix file: CSV with a `student` header column followed by one column per
/// item; cells are 0, 1, or empty for missing.
ResponseMatrix parse_matrix_csv(std::string_view csv);
std::string matrix_to_csv(const ResponseMatrix& m);

}  // namespace promptlit
