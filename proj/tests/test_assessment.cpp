#include <doctest.h>

#include "oracles.hpp"
#include "promptlit/content.hpp"

using namespace promptlit;
using nlohmann::json;

namespace {
const ItemBank& bank() { return content::item_bank(); }

AssessmentError::Kind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const AssessmentError& e) {
    return e.kind();
  }
  FAIL("expected AssessmentError");
  return {};
}
}  // namespace

TEST_CASE("objective scoring follows the key") {
  const auto& mcq = bank().item("MCQ1");
  const auto key = std::get<std::size_t>(mcq.correct);
  CHECK(score_objective(mcq, ChoiceResponse{key}) == 1);
  CHECK(score_objective(mcq, ChoiceResponse{(key + 1) % 3}) == 0);
  const auto& tf = bank().item("TF1");
  const bool truth = std::get<bool>(tf.correct);
  CHECK(score_objective(tf, TruthResponse{truth}) == 1);
  CHECK(score_objective(tf, TruthResponse{!truth}) == 0);
  CHECK(kind_of([&] { score_objective(tf, ChoiceResponse{0}); }) == AssessmentError::Kind::InvalidResponse);
  CHECK(kind_of([&] { score_objective(bank().item("OE1"), TextResponse{"x"}); }) ==
        AssessmentError::Kind::KindMismatch);
}

TEST_CASE("form scoring counts missing items as zero and lists them") {
  const auto& v2 = bank().form("v2");
  std::map<std::string, Response> answers;
  answers["TF1"] = TruthResponse{std::get<bool>(bank().item("TF1").correct)};
  answers["TF2"] = TruthResponse{!std::get<bool>(bank().item("TF2").correct)};
  answers["OE1"] = TextResponse{"it can explain ideas"};
  const auto s = score_form(v2, bank(), answers);
  CHECK(s.max == 10);
  CHECK(s.total == 1);
  CHECK(s.missing.size() == 8);
  CHECK(s.per_objective.at(LearningObjective::AICapacity) == 1);
  answers["MCQ1"] = ChoiceResponse{0};
  CHECK(kind_of([&] { score_form(v2, bank(), answers); }) == AssessmentError::Kind::UnknownItem);
}

TEST_CASE("likert delta") {
  CHECK(likert_delta(2, 5) == 3);
  CHECK(likert_delta(4, 1) == -3);
  CHECK(kind_of([] { likert_delta(0, 3); }) == AssessmentError::Kind::OutOfRange);
  CHECK(kind_of([] { likert_delta(3, 6); }) == AssessmentError::Kind::OutOfRange);
}

TEST_CASE("responses decode from JSON per item kind") {
  CHECK(response_from_json(bank().item("MCQ1"), 2) == Response{ChoiceResponse{2}});
  CHECK(response_from_json(bank().item("TF1"), true) == Response{TruthResponse{true}});
  CHECK(response_from_json(bank().item("OE1"), "text") == Response{TextResponse{"text"}});
  CHECK(response_from_json(bank().item("LK1"), 4) == Response{LikertResponse{4}});
  CHECK(kind_of([] { response_from_json(bank().item("MCQ1"), 3); }) == AssessmentError::Kind::InvalidResponse);
  CHECK(kind_of([] { response_from_json(bank().item("MCQ1"), -1); }) == AssessmentError::Kind::InvalidResponse);
  CHECK(kind_of([] { response_from_json(bank().item("TF1"), 1); }) == AssessmentError::Kind::InvalidResponse);
  CHECK(kind_of([] { response_from_json(bank().item("OE1"), 5); }) == AssessmentError::Kind::InvalidResponse);
  CHECK(kind_of([] { response_from_json(bank().item("LK1"), 6); }) == AssessmentError::Kind::InvalidResponse);
  CHECK(kind_of([] { response_from_json(bank().item("LK1"), 2.5); }) == AssessmentError::Kind::InvalidResponse);
  CHECK(response_to_json(ChoiceResponse{1}) == json(1));
  CHECK(response_to_json(TruthResponse{false}) == json(false));
  CHECK(response_to_json(LikertResponse{5}) == json(5));
}

TEST_CASE("item bank validation rejects malformed MCQs and TF keys") {
  const auto v = validate_item_bank(oracle::slurp(PROMPTLIT_FIXTURES "/items_bad_mcq.yaml"));
  CHECK_FALSE(v.ok());
  auto has = [&](std::string_view path, std::string_view fragment) {
    return std::any_of(v.errors.begin(), v.errors.end(), [&](const ValidationError& e) {
      return e.path == path && e.message.find(fragment) != std::string::npos;
    });
  };
  CHECK(has("items[0].options", "exactly 3 options"));
  CHECK(has("items[1].correct", "exactly one correct"));
  CHECK(has("items[2].correct", "true or false"));
  CHECK(has("forms[0].items", "6 MCQs"));
}

TEST_CASE("item bank validation enforces the v2 objective mapping") {
  std::string doc(content::item_bank_text());
  // Retarget TF1 at the wrong objective.
  const auto pos = doc.find("- id: TF1");
  REQUIRE(pos != std::string::npos);
  const auto lo = doc.find("learning_objective: AICapacity", pos);
  REQUIRE(lo != std::string::npos);
  doc.replace(lo, std::string("learning_objective: AICapacity").size(), "learning_objective: ContextsToUseAI");
  const auto v = validate_item_bank(doc);
  REQUIRE_FALSE(v.ok());
  CHECK(v.errors.front().message.find("TF1") != std::string::npos);
  CHECK(validate_item_bank(content::item_bank_text()).ok());
}

TEST_CASE("response matrix from cohort answers and OE scores") {
  const auto& v2 = bank().form("v2");
  std::vector<StudentResponses> cohort(2);
  cohort[0].student_id = "a";
  cohort[1].student_id = "b";
  const bool k1 = std::get<bool>(bank().item("TF1").correct);
  cohort[0].responses["TF1"] = TruthResponse{k1};
  cohort[1].responses["TF1"] = TruthResponse{!k1};
  OpenEndedScores oe{{{"a", "OE2"}, 1}, {{"b", "OE2"}, 0}};
  const auto m = build_response_matrix(v2, bank(), cohort, oe);
  CHECK(m.cols() == 11);  // 10 TF + the scored OE item
  CHECK(m.at(0, 0) == Cell::Right);
  CHECK(m.at(1, 0) == Cell::Wrong);
  CHECK(m.at(0, 1) == Cell::Missing);
  const auto oe_col = m.column_index("OE2");
  REQUIRE(oe_col.has_value());
  CHECK(m.at(0, *oe_col) == Cell::Right);
  CHECK(m.at(1, *oe_col) == Cell::Wrong);
  CHECK(m.totals() == std::vector<int>{2, 0});
  CHECK(m.complete_rows().rows() == 0);
  CHECK_THROWS_AS(build_response_matrix(v2, bank(), {}), PreconditionError);
}

TEST_CASE("matrix CSV round trip and validation") {
  const auto text = oracle::slurp(PROMPTLIT_FIXTURES "/items_matrix_30.csv");
  const auto m = parse_matrix_csv(text);
  CHECK(m.rows() == 30);
  CHECK(m.cols() == 15);
  CHECK(m.has_missing());
  CHECK(m.complete_rows().rows() == 28);
  CHECK(matrix_to_csv(m) == text);
  CHECK(parse_matrix_csv(matrix_to_csv(m)) == m);
  CHECK_THROWS_AS(parse_matrix_csv("id,TF1\nS1,1\n"), PreconditionError);
  CHECK_THROWS_AS(parse_matrix_csv("student,TF1\nS1,2\n"), PreconditionError);
  CHECK_THROWS_AS(parse_matrix_csv("student,TF1,TF2\nS1,1\n"), PreconditionError);
  const auto sub = m.select_items({"OE1", "TF1"});
  CHECK(sub.items() == std::vector<std::string>{"OE1", "TF1"});
  CHECK(sub.at(3, 1) == m.at(3, 0));
  CHECK(kind_of([&] { m.select_items({"ZZ"}); }) == AssessmentError::Kind::UnknownItem);
}
