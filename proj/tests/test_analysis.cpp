#include <doctest.h>

#include "goldens.hpp"
#include "oracles.hpp"
#include "promptlit/analysis.hpp"
#include "promptlit/content.hpp"
#include "promptlit/csv.hpp"
#include "promptlit/simulate.hpp"

using namespace promptlit;

namespace {

const std::string kFixtures = PROMPTLIT_FIXTURES;

analysis::ItemsReport items_report() {
  const auto matrix = parse_matrix_csv(oracle::slurp(kFixtures + "/items_matrix_30.csv"));
  return analysis::analyze_items(matrix, content::item_bank(), "v2", "items_matrix_30.csv");
}

}  // namespace

TEST_CASE("item analysis reproduces the independent golden on a 30 x 15 matrix") {
  const auto report = items_report();
  const auto expected = golden::items(kFixtures + "/items_golden_30.csv");
  REQUIRE(expected.size() == 15);
  REQUIRE(report.classification.items.size() == 15);
  CHECK(report.students == 30);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& [id, row] = expected[i];
    const auto& got = report.classification.items[i];
    CAPTURE(id);
    CHECK(got.item_id == id);
    CHECK(std::abs(got.difficulty - static_cast<double>(row.difficulty())) <= 1e-15);
    CHECK(std::abs(got.discrimination - static_cast<double>(row.discrimination())) <= 1e-15);
    CHECK(got.in_desired_range == row.in_range);
  }
  // 7/10 TF and 4/5 OE items fall in range in the golden.
  CHECK(report.classification.fraction_in_range.at(ItemKind::TF) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(report.classification.fraction_in_range.at(ItemKind::OE) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("alpha over the complete rows matches the exact rational value") {
  const auto report = items_report();
  const auto a = golden::alpha(kFixtures + "/items_alpha_30.txt");
  CHECK(report.complete_students == static_cast<std::size_t>(a.rows));
  REQUIRE(report.alpha.has_value());
  CHECK(std::abs(*report.alpha - static_cast<double>(a.value())) <= 1e-12);
  // And against the sample-variance oracle on the same rows.
  std::vector<std::vector<double>> rows;
  for (const auto& r : csv::parse(oracle::slurp(kFixtures + "/items_matrix_30.csv"))) {
    if (r[0] == "student") continue;
    std::vector<double> v;
    bool complete = true;
    for (std::size_t c = 1; c < r.size(); ++c) {
      if (r[c].empty()) complete = false;
      else v.push_back(std::stod(r[c]));
    }
    if (complete) rows.push_back(v);
  }
  CHECK(rows.size() == 28);
  CHECK(*report.alpha == doctest::Approx(oracle::cronbach_alpha(rows)).epsilon(1e-12));
}

TEST_CASE("items report JSON and text") {
  const auto report = items_report();
  const auto j = analysis::to_json(report);
  CHECK(j["items"].size() == 15);
  CHECK(j["summary"]["TF"]["items"] == 10);
  CHECK(j["complete_students"] == 28);
  const auto text = analysis::render_text(report);
  CHECK(text.find("OE5") != std::string::npos);
}

TEST_CASE("grader evaluation reproduces the golden confusion tables") {
  const auto corpus = analysis::parse_grader_fixture(oracle::slurp(kFixtures + "/grader_fixture.csv"));
  const auto report = analysis::analyze_grader(corpus);
  const auto expected = golden::grader(kFixtures + "/grader_golden.csv");
  CHECK(report.attempts == 100);
  REQUIRE(report.explanation.has_value());
  for (Dimension d : kAllDimensions) {
    const std::string name(to_string(d));
    CAPTURE(name);
    const auto& e = expected.at(name);
    const auto& c = report.pass_fail.per_dimension.at(d);
    CHECK(c.true_pass == e.tp);
    CHECK(c.false_pass == e.fp);
    CHECK(c.false_fail == e.fn);
    CHECK(c.true_fail == e.tn);
    CHECK(std::abs(c.accuracy() - static_cast<double>(e.accuracy)) <= 1e-12);
    CHECK(std::abs(report.explanation->per_dimension.at(d) - static_cast<double>(e.explanation)) <= 1e-12);
  }
  CHECK(report.pass_fail.accuracy(Dimension::NoDirectAnswer) == doctest::Approx(0.88).epsilon(1e-12));
  CHECK(std::abs(report.explanation->overall - static_cast<double>(expected.at("overall").explanation)) <= 1e-12);

  const auto j = analysis::to_json(report);
  CHECK(j["dimensions"]["Relevance"]["confusion"]["true_pass"] == 80);
  CHECK(j["dimensions"]["NoDirectAnswer"]["pass_fail_accuracy"].get<double>() == doctest::Approx(0.88));

  const auto text = analysis::render_text(report);
  const auto header = text.substr(text.find('\n') + 1);
  std::size_t pos = 0;
  for (Dimension d : kAllDimensions) {
    const auto at = header.find(std::string(short_label(d)), pos);
    CHECK(at != std::string::npos);
    pos = at;
  }
  CHECK(header.find("Overall", pos) != std::string::npos);
  CHECK(text.find("Pass/fail accuracy") != std::string::npos);
  CHECK(text.find("0.88") != std::string::npos);
}

TEST_CASE("grader fixture parsing rejects bad rows") {
  const std::string header = "attempt,dimension,predicted,human,explanation_rating\n";
  CHECK_THROWS(analysis::parse_grader_fixture(header + "a/s1/1,Relevance,2,1,\n"));
  CHECK_THROWS(analysis::parse_grader_fixture(header + "a/s1/1,Brevity,1,1,\n"));
  CHECK_THROWS(analysis::parse_grader_fixture("x,y\n1,2\n"));
  const auto ok = analysis::parse_grader_fixture(header + "a/s1/1,Relevance,1,0,\n");
  CHECK(ok.predicted.size() == 1);
  CHECK(ok.ratings.empty());
}

TEST_CASE("learning outcomes on a simulated cohort agree with counts taken from the exports") {
  Store store;
  SimulationOptions opt;
  opt.students = 30;
  opt.seed = 11;
  opt.labels = false;
  const auto sim = simulate_cohort(store, content::scenarios(), content::item_bank(), opt);
  const auto cohort = analysis::completed_cohort(analysis::summarize_store(store, content::item_bank()));
  REQUIRE(cohort.size() == 30);
  const auto report = analysis::analyze_learning(cohort, content::scenarios(), content::item_bank(), {});
  CHECK(report.students == 30);
  CHECK(report.first_scenario == "s1");
  CHECK(report.last_scenario == "s3");
  // s1 and s3 share Relevance, ClarityOfPurpose, Conciseness, BackgroundContext.
  REQUIRE(report.dimensions.size() == 4);

  // Independent count: last attempt per (session, scenario) from the grades export.
  std::map<std::pair<std::string, std::string>, int> last_index;
  const auto grades = csv::parse(sim.grades_csv);
  for (std::size_t i = 1; i < grades.size(); ++i) {
    auto& slot = last_index[{grades[i][0], grades[i][1]}];
    slot = std::max(slot, std::stoi(grades[i][2]));
  }
  std::map<std::tuple<std::string, std::string, std::string>, bool> verdict;
  for (std::size_t i = 1; i < grades.size(); ++i) {
    const auto& g = grades[i];
    if (std::stoi(g[2]) == last_index[{g[0], g[1]}]) verdict[{g[0], g[1], g[3]}] = g[4] == "1";
  }
  for (const auto& change : report.dimensions) {
    const std::string dim(to_string(change.dimension));
    CAPTURE(dim);
    std::uint64_t b = 0;
    std::uint64_t c = 0;
    std::size_t pass1 = 0;
    for (const auto& s : cohort) {
      const bool v1 = verdict.at({s.session_id, "s1", dim});
      const bool v3 = verdict.at({s.session_id, "s3", dim});
      b += v1 && !v3;
      c += !v1 && v3;
      pass1 += v1;
    }
    CHECK(change.pairs == 30);
    CHECK(change.only_first == b);
    CHECK(change.only_last == c);
    CHECK(change.first_pass_rate == doctest::Approx(pass1 / 30.0));
    if (b + c <= 25) CHECK(change.test.p_value == doctest::Approx(oracle::mcnemar_p(b, c)).epsilon(1e-9));
  }

  // Survey deltas from the responses export.
  const auto responses = csv::parse(sim.responses_csv);
  for (const auto& sc : report.surveys) {
    std::map<std::string, std::pair<double, double>> pairs;
    for (const auto& r : responses) {
      if (r[2] != "survey" || r[4] != sc.item_id) continue;
      (r[3] == "pre" ? pairs[r[0]].first : pairs[r[0]].second) = std::stod(r[5]);
    }
    std::vector<double> diffs;
    double pre = 0;
    double post = 0;
    for (const auto& [sid, p] : pairs) {
      pre += p.first;
      post += p.second;
      if (p.second != p.first) diffs.push_back(p.second - p.first);
    }
    CAPTURE(sc.item_id);
    CHECK(sc.pairs == pairs.size());
    CHECK(sc.pre_mean == doctest::Approx(pre / pairs.size()));
    CHECK(sc.post_mean == doctest::Approx(post / pairs.size()));
    if (!diffs.empty() && diffs.size() <= 20 && sc.test) {
      CHECK(sc.test->p_value == doctest::Approx(oracle::wilcoxon_p(diffs)).epsilon(1e-9));
    }
  }
  const auto j = analysis::to_json(report);
  CHECK(j["dimensions"].size() == 4);
  CHECK(analysis::render_text(report).find("McNemar") != std::string::npos);
}

TEST_CASE("learning analysis needs completed sessions") {
  CHECK_THROWS_AS(analysis::analyze_learning({}, content::scenarios(), content::item_bank(), {}), stats::StatsError);
}
