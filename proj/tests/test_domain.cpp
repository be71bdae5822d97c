#include <doctest.h>

#include "oracles.hpp"
#include "promptlit/domain.hpp"

using namespace promptlit;

TEST_CASE("dimension names round trip in canonical order") {
  for (std::size_t i = 0; i < kAllDimensions.size(); ++i) {
    const Dimension d = kAllDimensions[i];
    CHECK(static_cast<std::size_t>(d) == i);
    CHECK(parse_dimension(to_string(d)) == d);
    CHECK_FALSE(general_definition(d).empty());
    CHECK_FALSE(short_label(d).empty());
  }
  CHECK_FALSE(parse_dimension("relevance").has_value());
  CHECK(short_label(Dimension::ClarityOfPurpose) == "Purpose");
  CHECK(short_label(Dimension::NoDirectAnswer) == "No Answer");
}

TEST_CASE("learning objectives and grader kinds parse") {
  for (auto lo : {LearningObjective::AICapacity, LearningObjective::ContextsToUseAI,
                  LearningObjective::EffectivePromptFormation}) {
    CHECK(parse_learning_objective(to_string(lo)) == lo);
  }
  for (auto k : {GraderKind::Llm, GraderKind::Mock, GraderKind::Human}) CHECK(parse_grader_kind(to_string(k)) == k);
  CHECK_FALSE(parse_grader_kind("robot").has_value());
}

TEST_CASE("timestamps format as ISO-8601 UTC with milliseconds") {
  const Timestamp t = parse_timestamp("2025-01-06T09:00:01.250Z");
  CHECK(format_timestamp(t) == "2025-01-06T09:00:01.250Z");
  CHECK(format_timestamp(parse_timestamp("2024-02-29T23:59:59Z")) == "2024-02-29T23:59:59.000Z");
  CHECK_THROWS_AS(parse_timestamp("yesterday"), PreconditionError);
  CHECK_THROWS_AS(parse_timestamp("2023-02-30T00:00:00Z"), PreconditionError);
}

TEST_CASE("attempt keys") {
  AttemptRef a{"sess", "s2", 3};
  CHECK(a.key() == "sess/s2/3");
  CHECK(AttemptRef{"a", "s1", 1} < AttemptRef{"a", "s1", 2});
}

TEST_CASE("grade report invariants") {
  GradeReport r;
  r.verdicts[Dimension::Relevance] = {true, "on topic"};
  r.verdicts[Dimension::Conciseness] = {false, "   "};
  const auto v = grade_report_violations(r, {Dimension::Relevance, Dimension::BackgroundContext});
  CHECK(v.size() == 3);  // missing BackgroundContext, unexpected Conciseness, blank explanation
  r.verdicts.erase(Dimension::Conciseness);
  r.verdicts[Dimension::BackgroundContext] = {false, "no background"};
  CHECK(grade_report_violations(r, {Dimension::Relevance, Dimension::BackgroundContext}).empty());
}

TEST_CASE("scenario validation accepts a minimal bundle") {
  const auto v = validate_scenario_config(R"(
scenarios:
  - id: x1
    subject: math
    title: Fractions
    learning_objective: EffectivePromptFormation
    narrative: You are stuck on fractions.
    dimensions:
      - Conciseness
      - {id: Relevance, description: About fractions.}
    topic_terms: [Fraction, fraction, denominator]
)");
  REQUIRE(v.ok());
  REQUIRE(v.value.size() == 1);
  const auto& s = v.value[0];
  CHECK(s.applicable_dimensions == std::vector<Dimension>{Dimension::Relevance, Dimension::Conciseness});
  CHECK(s.description_of(Dimension::Relevance) == "About fractions.");
  CHECK(s.description_of(Dimension::Conciseness) == general_definition(Dimension::Conciseness));
  CHECK(s.topic_terms == std::vector<std::string>{"fraction", "denominator"});

  const auto again = validate_scenario_config(serialize_scenarios(v.value));
  REQUIRE(again.ok());
  CHECK(again.value == v.value);
}

TEST_CASE("scenario validation reports every problem with a path") {
  const auto v = validate_scenario_config(oracle::slurp(PROMPTLIT_FIXTURES "/scenarios_bad.yaml"));
  CHECK_FALSE(v.ok());
  CHECK(v.value.empty());
  auto has = [&](std::string_view path) {
    return std::any_of(v.errors.begin(), v.errors.end(), [&](const auto& e) { return e.path == path; });
  };
  CHECK(has("scenarios[0].narrative"));
  CHECK(has("scenarios[0].dimensions[1]"));  // listed twice
  CHECK(has("scenarios[0].dimensions[2]"));  // unknown
  CHECK(has("scenarios[1].id"));             // duplicate
  CHECK(has("scenarios[1].learning_objective"));
  CHECK(has("scenarios[1].dimensions"));
  CHECK_FALSE(validate_scenario_config("scenarios: [unclosed").ok());
  CHECK_FALSE(validate_scenario_config("other: 1").ok());
}

TEST_CASE("content error lists all messages") {
  ContentError e({{"a.b", "bad"}, {"", "worse"}});
  CHECK(e.errors().size() == 2);
  CHECK(std::string(e.what()).find("a.b: bad") != std::string::npos);
  CHECK(std::string(e.what()).find("worse") != std::string::npos);
}
