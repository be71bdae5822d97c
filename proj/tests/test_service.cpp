#include <doctest.h>

#include "promptlit/content.hpp"
#include "promptlit/csv.hpp"
#include "promptlit/service.hpp"
#include "session_driver.hpp"
#include "temp_dir.hpp"

using namespace promptlit;
using nlohmann::json;

namespace {

ServiceDeps fixed_deps() {
  ServiceDeps deps;
  auto now = std::make_shared<Timestamp>(parse_timestamp("2025-04-01T08:00:00Z"));
  deps.clock = [now] { return *now += std::chrono::seconds(1); };
  auto n = std::make_shared<int>(0);
  deps.new_session_id = [n] { return "sess-" + std::to_string(++*n); };
  deps.sleeper = [](auto) {};
  return deps;
}

PracticeService mock_service(Store& store) {
  return PracticeService(store, content::scenarios(), content::item_bank(), ServiceOptions{}, fixed_deps());
}

int status_of(auto&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return classify_error(e).status;
  }
  return 200;
}

/// Runs one session to Done; two attempts on the first scenario.
std::string run_session(PracticeService& svc, const std::string& student) {
  const auto& bank = content::item_bank();
  const std::string id = svc.create_session({{"student_id", student}})["session_id"];
  svc.submit_survey(id, driver::survey_answers(bank.pre_survey, 2));
  svc.submit_test(id, driver::test_answers(bank, "v2", false));
  for (const auto& w : bank.warmup) svc.submit_warmup(id, {{"item_id", w.id}, {"choice", w.correct}});
  svc.advance(id, {{"choice", "next"}});
  svc.submit_prompt(id, {{"text", "tell me stuff"}});
  svc.check(id);
  svc.advance(id, {{"choice", "retry"}});
  for (int i = 0; i < kScenarioCount; ++i) {
    svc.submit_prompt(id, {{"text", "I learned this in class. Can you explain it step by step?"}});
    svc.check(id);
    svc.advance(id, {{"choice", "next"}});
  }
  svc.submit_test(id, driver::test_answers(bank, "v2", true));
  svc.submit_survey(id, driver::survey_answers(bank.post_survey, 4));
  svc.submit_reflection(id, driver::reflection_answers(bank));
  return id;
}

}  // namespace

TEST_CASE("a mock session walks every phase to Done") {
  Store store;
  auto svc = mock_service(store);
  const auto& bank = content::item_bank();
  const auto created = svc.create_session({{"student_id", "  stu-01 "}});
  const std::string id = created["session_id"];
  CHECK(id == "sess-1");
  CHECK(created["state"]["student_id"] == "stu-01");
  CHECK(created["state"]["current"]["survey"] == "pre");
  CHECK(created["state"]["allowed_events"] == json::array({"SurveyAnswered"}));

  svc.submit_survey(id, driver::survey_answers(bank.pre_survey));
  const auto test = svc.submit_test(id, driver::test_answers(bank, "v2"));
  CHECK(test["score"] == test["max"]);
  CHECK(test["missing"].empty());

  const auto& w = bank.warmup.front();
  const auto wrong = svc.submit_warmup(id, {{"item_id", w.id}, {"choice", (w.correct + 1) % w.options.size()}});
  CHECK(wrong["correct"] == false);
  CHECK(wrong["feedback"] == w.hint);
  CHECK(svc.submit_warmup(id, {{"item_id", w.id}, {"choice", w.correct}})["correct"] == true);

  auto state = svc.advance(id, {{"choice", "next"}})["state"];
  CHECK(state["current"]["scenario"]["id"] == "s1");
  const auto prompt = svc.submit_prompt(id, {{"text", "Can you explain cells to me?"}});
  CHECK(prompt["attempt"]["attempt_index"] == 1);
  CHECK(prompt["response"].get<std::string>().find("[biology]") == 0);
  CHECK(prompt["state"]["current"]["last_prompt"] == "Can you explain cells to me?");
  const auto graded = svc.check(id);
  CHECK(graded["report"]["grader_kind"] == "mock");
  CHECK(graded["report"]["verdicts"].size() == 4);
  CHECK(graded["state"]["current"].contains("last_grade"));

  svc.advance(id, {{"choice", "next"}});
  svc.submit_prompt(id, {{"text", "Why does the equation balance? Show me the steps."}});
  svc.advance(id, {{"choice", "next"}});
  svc.submit_prompt(id, {{"text", "How do I solve it? Explain why."}});
  svc.check(id);
  state = svc.advance(id, {{"choice", "next"}})["state"];
  CHECK(state["phase"] == "PostTest");
  svc.submit_test(id, driver::test_answers(bank, "v2", false));
  svc.submit_survey(id, driver::survey_answers(bank.post_survey));
  state = svc.submit_reflection(id, driver::reflection_answers(bank))["state"];
  CHECK(state["phase"] == "Done");
  CHECK(state["allowed_events"].empty());
  CHECK(svc.get_session(id)["attempts"] == json::array({1, 1, 1}));
}

TEST_CASE("out-of-order calls are illegal transitions and change nothing") {
  Store store;
  auto svc = mock_service(store);
  const std::string id = svc.create_session({{"student_id", "s"}})["session_id"];
  const auto before = store.events(id).size();
  CHECK(status_of([&] { svc.check(id); }) == 409);
  CHECK(status_of([&] { svc.submit_prompt(id, {{"text", "hi"}}); }) == 409);
  CHECK(status_of([&] { svc.advance(id, {{"choice", "next"}}); }) == 409);
  CHECK(status_of([&] { svc.submit_reflection(id, driver::reflection_answers(content::item_bank())); }) == 409);
  CHECK(store.events(id).size() == before);
  CHECK_THROWS_AS(svc.check(id), TransitionError);
}

TEST_CASE("error classification") {
  Store store;
  auto svc = mock_service(store);
  const auto& bank = content::item_bank();
  CHECK(status_of([&] { svc.get_session("nope"); }) == 404);
  CHECK(status_of([&] { svc.create_session({{"student_id", ""}}); }) == 400);
  CHECK(status_of([&] { svc.create_session(json::object()); }) == 400);
  CHECK(status_of([&] { svc.create_session({{"student_id", std::string(65, 'x')}}); }) == 400);
  const std::string id = svc.create_session({{"student_id", "s"}})["session_id"];
  CHECK(status_of([&] { svc.submit_survey(id, {{"answers", {{"LK1", 3}}}}); }) == 400);
  auto bad = driver::survey_answers(bank.pre_survey);
  bad["answers"]["LK1"] = 9;
  CHECK(status_of([&] { svc.submit_survey(id, bad); }) == 400);
  bad = driver::survey_answers(bank.pre_survey);
  bad["answers"]["ZZ"] = 3;
  CHECK(status_of([&] { svc.submit_survey(id, bad); }) == 400);
  svc.submit_survey(id, driver::survey_answers(bank.pre_survey));
  auto answers = driver::test_answers(bank, "v2");
  answers["answers"]["TF1"] = "true";
  CHECK(status_of([&] { svc.submit_test(id, answers); }) == 400);
  svc.submit_test(id, driver::test_answers(bank, "v2"));
  const auto& w = bank.warmup.front();
  CHECK(status_of([&] { svc.submit_warmup(id, {{"item_id", w.id}, {"choice", -1}}); }) == 400);
  CHECK(status_of([&] { svc.submit_warmup(id, {{"item_id", w.id}, {"choice", w.options.size()}}); }) == 400);
  CHECK(status_of([&] { svc.submit_warmup(id, {{"item_id", "W99"}, {"choice", 0}}); }) == 400);
  CHECK(status_of([&] { svc.advance(id, {{"choice", "sideways"}}); }) == 400);
  svc.advance(id, {{"choice", "next"}});
  CHECK(status_of([&] { svc.submit_prompt(id, {{"text", "   "}}); }) == 400);
  CHECK(store.session(id)->attempts == std::array<int, 3>{0, 0, 0});

  CHECK(classify_error(StoreError(StoreError::Kind::ConflictingEvent, "x")).status == 409);
  CHECK(classify_error(StoreError(StoreError::Kind::UnknownSession, "x")).status == 404);
  CHECK(classify_error(GradingFailed("x", 3)).status == 503);
  CHECK(classify_error(std::runtime_error("x")).status == 500);
  CHECK(classify_error(std::runtime_error("x")).to_json()["error"]["code"] == "internal");
}

TEST_CASE("live backend failures map to 502 and 503 and leave the session as it was") {
  Store store;
  auto stub = std::make_shared<StubTransport>(std::vector<TransportReply>{StubTransport::status(401)});
  ServiceOptions opt;
  opt.backend = Backend::Live;
  auto deps = fixed_deps();
  deps.transport = stub;
  PracticeService svc(store, content::scenarios(), content::item_bank(), opt, deps);
  const auto& bank = content::item_bank();
  const std::string id = svc.create_session({{"student_id", "s"}})["session_id"];
  svc.submit_survey(id, driver::survey_answers(bank.pre_survey));
  svc.submit_test(id, driver::test_answers(bank, "v2"));
  svc.advance(id, {{"choice", "next"}});
  const auto before = *store.session(id);
  CHECK(status_of([&] { svc.submit_prompt(id, {{"text", "explain cells"}}); }) == 502);
  CHECK(*store.session(id) == before);
  CHECK(stub->calls() == 1);

  // Chat succeeds, then the grader keeps replying with junk.
  auto junk = std::make_shared<StubTransport>(
      std::vector<TransportReply>{StubTransport::ok("cells are small"), StubTransport::ok("no json")});
  auto deps2 = fixed_deps();
  deps2.transport = junk;
  deps2.new_session_id = [] { return std::string("other"); };
  PracticeService svc2(store, content::scenarios(), content::item_bank(), opt, deps2);
  const std::string id2 = svc2.create_session({{"student_id", "t"}})["session_id"];
  svc2.submit_survey(id2, driver::survey_answers(bank.pre_survey));
  svc2.submit_test(id2, driver::test_answers(bank, "v2"));
  svc2.advance(id2, {{"choice", "next"}});
  CHECK(svc2.submit_prompt(id2, {{"text", "explain cells"}})["response"] == "cells are small");
  const auto graded_before = *store.session(id2);
  CHECK(status_of([&] { svc2.check(id2); }) == 503);
  CHECK(junk->calls() == 1 + 3);
  CHECK(*store.session(id2) == graded_before);
  // The student may move on without a grade.
  CHECK(svc2.advance(id2, {{"choice", "next"}})["state"]["scenario_index"] == 1);
}

TEST_CASE("a restart on the same data directory restores identical state") {
  TempDir dir("service");
  std::string id;
  json before;
  std::string exported;
  {
    Store store(dir.path(), 7);
    auto svc = mock_service(store);
    id = run_session(svc, "stu-a");
    before = svc.get_session(id);
    exported = svc.export_table("grades");
  }
  Store reopened(dir.path(), 7);
  auto svc = mock_service(reopened);
  CHECK(svc.get_session(id) == before);
  CHECK(svc.export_table("grades") == exported);
  CHECK(before["phase"] == "Done");
}

TEST_CASE("exports carry fixed headers and one row per recorded value") {
  Store store;
  auto svc = mock_service(store);
  const auto& bank = content::item_bank();
  const std::string id = run_session(svc, "stu-b");

  const auto responses = csv::parse(svc.export_table("responses"));
  REQUIRE(!responses.empty());
  CHECK(responses[0] == std::vector<std::string>{"session_id", "student_id", "instrument", "occasion", "item_id",
                                                  "value", "correct"});
  const auto form_size = bank.form("v2").item_ids.size();
  const auto expected = 1 + bank.pre_survey.size() + bank.post_survey.size() + 2 * form_size + bank.warmup.size() +
                        bank.reflection.size();
  CHECK(responses.size() == expected);
  std::size_t pre_wrong = 0;
  std::size_t post_right = 0;
  for (const auto& row : responses) {
    if (row[2] == "test" && row[3] == "pre" && row[6] == "0") ++pre_wrong;
    if (row[2] == "test" && row[3] == "post" && row[6] == "1") ++post_right;
  }
  CHECK(pre_wrong == 10);
  CHECK(post_right == 10);

  const auto attempts = csv::parse(svc.export_table("attempts"));
  CHECK(attempts[0] == std::vector<std::string>{"session_id", "student_id", "scenario_id", "attempt_index",
                                                 "submitted_at", "prompt_text", "response_text"});
  CHECK(attempts.size() == 1 + 4);
  CHECK(attempts[1][0] == id);
  CHECK(attempts[1][2] == "s1");
  CHECK(attempts[2][3] == "2");
  CHECK(attempts[1][5] == "tell me stuff");

  const auto grades = csv::parse(svc.export_table("grades"));
  CHECK(grades[0] == std::vector<std::string>{"session_id", "scenario_id", "attempt_index", "dimension", "pass",
                                               "explanation", "grader_kind", "template_version"});
  // s1 twice (4 dims), s2 (5), s3 (6).
  CHECK(grades.size() == 1 + 8 + 5 + 6);
  for (std::size_t i = 1; i < grades.size(); ++i) CHECK(grades[i][6] == "mock");

  CHECK(svc.export_table("labels").rfind("type,session_id,scenario_id,attempt_index,dimension", 0) == 0);
  CHECK_THROWS_AS(svc.export_table("secrets"), PreconditionError);
}

TEST_CASE("label import validates references and ratings") {
  Store store;
  auto svc = mock_service(store);
  const std::string id = run_session(svc, "stu-c");
  const std::string header = "type,session_id,scenario_id,attempt_index,dimension,student_id,item_id,occasion,value\n";
  const auto ok = svc.import_labels(header + "grade," + id + ",s1,1,Relevance,,,,1\n" + "explanation_rating," + id +
                                        ",s1,1,Relevance,,,,0.5\n" + "oe_score,,,,,stu-c,OE1,pre,1\n",
                                    true);
  CHECK(ok["imported"] == 3);
  CHECK(store.labels().size() == 3);
  CHECK(status_of([&] { svc.import_labels(header + "grade,ghost,s1,1,Relevance,,,,1\n", true); }) == 400);
  CHECK(status_of([&] { svc.import_labels(header + "explanation_rating," + id + ",s1,1,Relevance,,,,0.7\n", true); }) ==
        400);
  CHECK(status_of([&] { svc.import_labels(R"({"nope": 1})", false); }) == 400);
  CHECK(status_of([&] { svc.import_labels("{not json", false); }) == 400);
  const json doc = {{"labels", json::array({label_to_json(HumanGrade{{id, "s2", 1}, Dimension::Conciseness, false})})}};
  CHECK(svc.import_labels(doc.dump(), false)["imported"] == 1);
  CHECK(store.labels().size() == 4);
}

TEST_CASE("service needs three scenarios and a known test form") {
  Store store;
  auto two = content::scenarios();
  two.pop_back();
  CHECK_THROWS_AS(PracticeService(store, two, content::item_bank(), ServiceOptions{}), PreconditionError);
  ServiceOptions opt;
  opt.test_form = "v9";
  CHECK_THROWS(PracticeService(store, content::scenarios(), content::item_bank(), opt));
}

TEST_CASE("public item listing hides answer keys") {
  Store store;
  auto svc = mock_service(store);
  const auto items = svc.items_json();
  CHECK(items["test_form"] == "v2");
  for (const auto& it : items["items"]) CHECK_FALSE(it.contains("correct"));
  CHECK(items["warmup"].size() == content::item_bank().warmup.size());
  CHECK(svc.scenarios_json().size() == 3);
  CHECK(svc.scenarios_json()[2]["dimensions"].size() == 6);
}
