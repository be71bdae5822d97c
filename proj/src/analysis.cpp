#include "promptlit/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "promptlit/csv.hpp"
#include "promptlit/grader.hpp"

namespace promptlit::analysis {

using nlohmann::json;

namespace {

/// Object member `answers`, or an empty object; the reference stays valid.
const json& answers_of(const json& payload) {
  static const json empty = json::object();
  auto it = payload.find("answers");
  return it != payload.end() && it->is_object() ? *it : empty;
}

std::string fixed(double v, int places = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string percent(double fraction) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.0f%%", fraction * 100.0);
  return buf;
}

json test_json(const stats::TestResult& t) {
  return {{"statistic", t.statistic}, {"p_value", t.p_value}, {"n", t.n}, {"method", stats::to_string(t.method)}};
}

std::string test_text(const stats::TestResult& t) {
  return "stat=" + fixed(t.statistic, 2) + " p=" + fixed(t.p_value, 4) + " (" + std::string(stats::to_string(t.method)) +
         ", n=" + std::to_string(t.n) + ")";
}

AttemptRef attempt_from_key(const std::string& key) {
  const auto a = key.find('/');
  const auto b = key.rfind('/');
  if (a != std::string::npos && b != a) {
    const std::string idx = key.substr(b + 1);
    if (!idx.empty() && std::all_of(idx.begin(), idx.end(), [](unsigned char c) { return std::isdigit(c); })) {
      return {key.substr(0, a), key.substr(a + 1, b - a - 1), std::stoi(idx)};
    }
  }
  return {key, "", 0};
}

using HumanVerdicts = std::map<std::pair<AttemptRef, Dimension>, bool>;

HumanVerdicts human_verdicts(const std::vector<Label>& labels) {
  HumanVerdicts out;
  for (const auto& l : labels) {
    if (const auto* g = std::get_if<HumanGrade>(&l)) out[{g->attempt, g->dimension}] = g->pass;
  }
  return out;
}

/// Human label when present, otherwise the stored grade.
std::optional<bool> outcome(const SessionRecord& s, const AttemptRef& attempt, Dimension d,
                            const HumanVerdicts& human) {
  if (auto it = human.find({attempt, d}); it != human.end()) return it->second;
  auto g = s.grades.find(attempt);
  if (g == s.grades.end()) return std::nullopt;
  auto v = g->second.verdicts.find(d);
  if (v == g->second.verdicts.end()) return std::nullopt;
  return v->second.pass;
}

}  // namespace

const PromptAttempt* SessionRecord::last_attempt(const std::string& scenario_id) const {
  const PromptAttempt* best = nullptr;
  for (const auto& a : attempts) {
    if (a.ref.scenario_id == scenario_id && (!best || a.ref.attempt_index > best->ref.attempt_index)) best = &a;
  }
  return best;
}

SessionRecord summarize_session(std::span<const SessionEvent> events, const ItemBank& bank) {
  SessionRecord r;
  for (const auto& e : events) {
    const json& p = e.payload;
    switch (e.kind) {
      case EventKind::Started:
        r.session_id = e.session_id;
        r.student_id = p.value("student_id", std::string());
        r.started_at = e.timestamp;
        break;
      case EventKind::SurveyAnswered: {
        auto& dst = r.surveys[p.value("occasion", std::string())];
        for (const auto& [k, v] : answers_of(p).items()) {
          if (v.is_number_integer()) dst[k] = v.get<int>();
        }
        break;
      }
      case EventKind::TestAnswered: {
        const std::string occasion = p.value("occasion", std::string());
        r.test_form[occasion] = p.value("form", std::string());
        auto& dst = r.tests[occasion];
        for (const auto& [k, v] : answers_of(p).items()) {
          const auto* item = bank.find_item(k);
          if (!item) continue;
          try {
            dst[k] = response_from_json(*item, v);
          } catch (const AssessmentError&) {
          }
        }
        break;
      }
      case EventKind::WarmupAnswered:
        r.warmup.emplace_back(p.value("item_id", std::string()), p.value("correct", false));
        break;
      case EventKind::PromptSubmitted:
        r.attempts.push_back({{e.session_id, p.value("scenario_id", std::string()), p.value("attempt_index", 0)},
                              p.value("text", std::string()),
                              e.timestamp});
        break;
      case EventKind::ResponseReceived:
        r.chatbot_responses[{e.session_id, p.value("scenario_id", std::string()), p.value("attempt_index", 0)}] =
            p.value("response", std::string());
        break;
      case EventKind::GradeReceived:
        if (p.contains("report")) {
          auto report = grade_report_from_json(p["report"]);
          r.grades[report.attempt] = std::move(report);
        }
        break;
      case EventKind::ReflectionSubmitted:
        for (const auto& [k, v] : answers_of(p).items()) {
          if (v.is_string()) r.reflections[k] = v.get<std::string>();
        }
        r.completed = true;
        break;
      default:
        break;
    }
  }
  return r;
}

std::vector<SessionRecord> summarize_store(const Store& store, const ItemBank& bank) {
  std::vector<SessionRecord> out;
  for (const auto& s : store.sessions()) {
    const auto events = store.events(s.session_id);
    out.push_back(summarize_session(events, bank));
  }
  return out;
}

std::vector<SessionRecord> completed_cohort(const std::vector<SessionRecord>& sessions) {
  std::map<std::string, const SessionRecord*> latest;
  for (const auto& s : sessions) {
    if (!s.completed) continue;
    auto& slot = latest[s.student_id];
    if (!slot || std::tie(s.started_at, s.session_id) > std::tie(slot->started_at, slot->session_id)) slot = &s;
  }
  std::vector<SessionRecord> out;
  for (const auto& [_, s] : latest) out.push_back(*s);
  return out;
}

// Items ---------------------------------------------------------------------------

ResponseMatrix cohort_matrix(const std::vector<SessionRecord>& cohort, const ItemBank& bank,
                             const AssessmentForm& form, const std::string& occasion,
                             const std::vector<Label>& labels) {
  std::vector<StudentResponses> rows;
  for (const auto& s : cohort) {
    auto f = s.test_form.find(occasion);
    if (f == s.test_form.end() || f->second != form.id) continue;
    rows.push_back({s.student_id, s.tests.at(occasion)});
  }
  OpenEndedScores oe;
  for (const auto& l : labels) {
    if (const auto* o = std::get_if<OpenEndedLabel>(&l); o && o->occasion == occasion) {
      oe[{o->student_id, o->item_id}] = o->score;
    }
  }
  if (rows.empty()) {
    throw stats::StatsError(stats::StatsError::Kind::InsufficientData,
                            "no completed session answered form '" + form.id + "' on the " + occasion + " test");
  }
  return build_response_matrix(form, bank, rows, oe);
}

ItemsReport analyze_items(const ResponseMatrix& matrix, const ItemBank& bank, std::string form_id,
                          std::string source) {
  ItemsReport r;
  r.form_id = std::move(form_id);
  r.source = std::move(source);
  r.students = matrix.rows();
  r.classification = stats::classify_items(matrix, bank);
  const ResponseMatrix complete = matrix.complete_rows();
  r.complete_students = complete.rows();
  try {
    r.alpha = stats::cronbach_alpha(complete);
  } catch (const stats::StatsError& e) {
    r.alpha_note = e.what();
  }
  return r;
}

json to_json(const ItemsReport& r) {
  json items = json::array();
  for (const auto& s : r.classification.items) {
    items.push_back({{"item_id", s.item_id},
                     {"kind", to_string(s.kind)},
                     {"difficulty", s.difficulty},
                     {"discrimination", s.discrimination},
                     {"in_desired_range", s.in_desired_range}});
  }
  json summary = json::object();
  for (const auto& [kind, frac] : r.classification.fraction_in_range) {
    summary[std::string(to_string(kind))] = {{"items", r.classification.count_by_kind.at(kind)},
                                             {"fraction_in_range", frac}};
  }
  json out = {{"form", r.form_id},
              {"source", r.source},
              {"students", r.students},
              {"complete_students", r.complete_students},
              {"items", items},
              {"summary", summary},
              {"alpha", r.alpha ? json(*r.alpha) : json(nullptr)}};
  if (!r.alpha_note.empty()) out["alpha_note"] = r.alpha_note;
  return out;
}

std::string render_text(const ItemsReport& r) {
  std::ostringstream out;
  out << "Item analysis: form " << r.form_id << " (" << r.source << "), " << r.students << " students\n";
  out << pad("item", 8) << pad("kind", 9) << pad("difficulty", 12) << pad("discrimination", 16) << "in range\n";
  for (const auto& s : r.classification.items) {
    out << pad(s.item_id, 8) << pad(std::string(to_string(s.kind)), 9) << pad(fixed(s.difficulty), 12)
        << pad(fixed(s.discrimination), 16) << (s.in_desired_range ? "yes" : "no") << '\n';
  }
  std::vector<std::string> parts;
  for (ItemKind k : {ItemKind::MCQ, ItemKind::TF, ItemKind::OE}) {
    auto it = r.classification.fraction_in_range.find(k);
    if (it != r.classification.fraction_in_range.end()) {
      parts.push_back(percent(it->second) + " of " + std::string(to_string(k)));
    }
  }
  std::string joined;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) joined += (i + 1 == parts.size()) ? " and " : ", ";
    joined += parts[i];
  }
  out << "Summary: " << joined << " items fall in the desired range (difficulty " << fixed(stats::kDifficultyLow, 1)
      << "-" << fixed(stats::kDifficultyHigh, 1) << ", discrimination >= " << fixed(stats::kMinDiscrimination, 1)
      << ").\n";
  if (r.alpha) {
    out << "Cronbach's alpha: " << fixed(*r.alpha) << " (" << r.complete_students << " complete students)\n";
  } else {
    out << "Cronbach's alpha: n/a (" << r.alpha_note << ")\n";
  }
  return out.str();
}

// Grader --------------------------------------------------------------------------

GraderCorpus parse_grader_fixture(std::string_view document) {
  const auto rows = csv::parse(document);
  const csv::Row header = {"attempt", "dimension", "predicted", "human", "explanation_rating"};
  if (rows.empty() || rows.front() != header) {
    throw PreconditionError("grader fixture must start with the header: attempt,dimension,predicted,human,"
                            "explanation_rating");
  }
  std::map<AttemptRef, GradeReport> predicted;
  std::map<AttemptRef, GradeReport> human;
  GraderCorpus corpus;
  auto bit = [](const std::string& v, const std::string& where) {
    if (v != "0" && v != "1") throw PreconditionError(where + ": expected 0 or 1, found '" + v + "'");
    return v == "1";
  };
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::string where = "fixture row " + std::to_string(i + 1);
    if (r.size() != header.size()) throw PreconditionError(where + ": expected 5 fields");
    const auto d = parse_dimension(r[1]);
    if (!d) throw PreconditionError(where + ": unknown dimension '" + r[1] + "'");
    const AttemptRef a = attempt_from_key(r[0]);
    auto& p = predicted[a];
    p.attempt = a;
    p.grader_kind = GraderKind::Llm;
    p.verdicts[*d] = {bit(r[2], where), "fixture"};
    auto& h = human[a];
    h.attempt = a;
    h.grader_kind = GraderKind::Human;
    h.verdicts[*d] = {bit(r[3], where), "fixture"};
    const std::string rating = text::trim(r[4]);
    if (!rating.empty()) {
      try {
        std::size_t used = 0;
        const double v = std::stod(rating, &used);
        if (used != rating.size()) throw std::invalid_argument("trailing");
        corpus.ratings[*d].push_back(v);
      } catch (const std::logic_error&) {
        throw PreconditionError(where + ": malformed rating '" + rating + "'");
      }
    }
  }
  for (auto& [_, r] : predicted) corpus.predicted.push_back(std::move(r));
  for (auto& [_, r] : human) corpus.human.push_back(std::move(r));
  return corpus;
}

GraderCorpus grader_corpus(const std::vector<SessionRecord>& sessions, const std::vector<Label>& labels) {
  std::map<AttemptRef, GradeReport> human;
  GraderCorpus corpus;
  for (const auto& l : labels) {
    if (const auto* g = std::get_if<HumanGrade>(&l)) {
      auto& h = human[g->attempt];
      h.attempt = g->attempt;
      h.grader_kind = GraderKind::Human;
      h.verdicts[g->dimension] = {g->pass, "human label"};
    } else if (const auto* e = std::get_if<ExplanationRating>(&l)) {
      corpus.ratings[e->dimension].push_back(e->rating);
    }
  }
  std::map<AttemptRef, const GradeReport*> stored;
  for (const auto& s : sessions) {
    for (const auto& [ref, g] : s.grades) stored[ref] = &g;
  }
  for (auto& [ref, h] : human) {
    GradeReport p;
    p.attempt = ref;
    if (auto it = stored.find(ref); it != stored.end()) {
      p = *it->second;
      // Restrict to the human-labelled dimensions; unlabelled ones are not scored.
      std::erase_if(p.verdicts, [&](const auto& kv) { return !h.verdicts.contains(kv.first); });
    }
    corpus.predicted.push_back(std::move(p));
    corpus.human.push_back(std::move(h));
  }
  return corpus;
}

GraderReport analyze_grader(const GraderCorpus& corpus) {
  GraderReport r;
  r.pass_fail = stats::grader_pass_fail_accuracy(corpus.predicted, corpus.human);
  std::set<AttemptRef> attempts;
  for (const auto& h : corpus.human) attempts.insert(h.attempt);
  r.attempts = attempts.size();
  if (!corpus.ratings.empty()) r.explanation = stats::explanation_accuracy(corpus.ratings);
  return r;
}

json to_json(const GraderReport& r) {
  json dims = json::object();
  for (Dimension d : kAllDimensions) {
    json entry = {{"pass_fail_accuracy", nullptr}, {"explanation_accuracy", nullptr}};
    if (auto it = r.pass_fail.per_dimension.find(d); it != r.pass_fail.per_dimension.end()) {
      const auto& c = it->second;
      entry["pass_fail_accuracy"] = c.accuracy();
      entry["pairs"] = c.total();
      entry["confusion"] = {{"true_pass", c.true_pass},
                            {"false_pass", c.false_pass},
                            {"false_fail", c.false_fail},
                            {"true_fail", c.true_fail}};
    }
    if (r.explanation) {
      if (auto it = r.explanation->per_dimension.find(d); it != r.explanation->per_dimension.end()) {
        entry["explanation_accuracy"] = it->second;
        entry["rated"] = r.explanation->counts.at(d);
      }
    }
    dims[std::string(to_string(d))] = entry;
  }
  return {{"attempts", r.attempts},
          {"dimensions", dims},
          {"mean_pass_fail_accuracy", r.pass_fail.per_dimension.empty() ? json(nullptr)
                                                                        : json(r.pass_fail.mean_accuracy())},
          {"overall_explanation_accuracy", r.explanation ? json(r.explanation->overall) : json(nullptr)},
          {"overall_explanation_weighting", "pooled mean over all rated (attempt, dimension) pairs"}};
}

std::string render_text(const GraderReport& r) {
  constexpr std::size_t kLabel = 28;
  constexpr std::size_t kCol = 16;
  std::ostringstream out;
  out << "Grader evaluation: " << r.attempts << " labelled attempts\n";
  out << pad("", kLabel);
  for (Dimension d : kAllDimensions) out << pad(std::string(short_label(d)), kCol);
  out << "Overall\n";

  out << pad("Pass/fail accuracy (1/0)", kLabel);
  for (Dimension d : kAllDimensions) {
    auto it = r.pass_fail.per_dimension.find(d);
    out << pad(it == r.pass_fail.per_dimension.end() ? "-" : fixed(it->second.accuracy(), 2), kCol);
  }
  out << (r.pass_fail.per_dimension.empty() ? "-" : fixed(r.pass_fail.mean_accuracy(), 2)) << '\n';

  out << pad("Explanation (1/0.5/0)", kLabel);
  for (Dimension d : kAllDimensions) {
    std::string cell = "-";
    if (r.explanation) {
      if (auto it = r.explanation->per_dimension.find(d); it != r.explanation->per_dimension.end()) {
        cell = fixed(it->second, 2);
      }
    }
    out << pad(cell, kCol);
  }
  out << (r.explanation ? fixed(r.explanation->overall, 2) : "-") << '\n';

  out << pad("Pairs", kLabel);
  for (Dimension d : kAllDimensions) {
    auto it = r.pass_fail.per_dimension.find(d);
    out << pad(it == r.pass_fail.per_dimension.end() ? "0" : std::to_string(it->second.total()), kCol);
  }
  out << '\n';
  out << pad("Confusion TP/FP/FN/TN", kLabel);
  for (Dimension d : kAllDimensions) {
    auto it = r.pass_fail.per_dimension.find(d);
    std::string cell = "-";
    if (it != r.pass_fail.per_dimension.end()) {
      const auto& c = it->second;
      cell = std::to_string(c.true_pass) + "/" + std::to_string(c.false_pass) + "/" + std::to_string(c.false_fail) +
             "/" + std::to_string(c.true_fail);
    }
    out << pad(cell, kCol);
  }
  out << '\n';
  out << "Overall pass/fail is the mean of dimension accuracies; overall explanation accuracy is the mean over "
         "all rated pairs.\n";
  return out.str();
}

// Learning -------------------------------------------------------------------------

LearningReport analyze_learning(const std::vector<SessionRecord>& cohort, const std::vector<Scenario>& scenarios,
                                const ItemBank& bank, const std::vector<Label>& labels,
                                const std::string& prior_use_item) {
  if (cohort.empty()) {
    throw stats::StatsError(stats::StatsError::Kind::InsufficientData, "no completed sessions to analyze");
  }
  if (scenarios.size() < 2) throw PreconditionError("learning analysis needs at least two scenarios");
  LearningReport r;
  r.students = cohort.size();
  r.prior_use_item = prior_use_item;
  const Scenario& first = scenarios.front();
  const Scenario& last = scenarios.back();
  r.first_scenario = first.id;
  r.last_scenario = last.id;
  const HumanVerdicts human = human_verdicts(labels);

  for (Dimension d : first.applicable_dimensions) {
    if (!last.applies(d)) continue;
    DimensionChange c;
    c.dimension = d;
    std::size_t first_pass = 0;
    std::size_t last_pass = 0;
    for (const auto& s : cohort) {
      const auto* a1 = s.last_attempt(first.id);
      const auto* a3 = s.last_attempt(last.id);
      if (!a1 || !a3) continue;
      const auto o1 = outcome(s, a1->ref, d, human);
      const auto o3 = outcome(s, a3->ref, d, human);
      if (!o1 || !o3) continue;
      ++c.pairs;
      first_pass += *o1;
      last_pass += *o3;
      if (*o1 && !*o3) ++c.only_first;
      if (!*o1 && *o3) ++c.only_last;
    }
    if (c.pairs > 0) {
      c.first_pass_rate = static_cast<double>(first_pass) / c.pairs;
      c.last_pass_rate = static_cast<double>(last_pass) / c.pairs;
    }
    c.test = stats::mcnemar_test(c.only_first, c.only_last);
    r.dimensions.push_back(c);
  }

  for (const auto& item : bank.post_survey) {
    if (std::find(bank.pre_survey.begin(), bank.pre_survey.end(), item) == bank.pre_survey.end()) continue;
    SurveyChange sc;
    sc.item_id = item;
    std::vector<double> pre;
    std::vector<double> post;
    for (const auto& s : cohort) {
      auto p0 = s.surveys.find("pre");
      auto p1 = s.surveys.find("post");
      if (p0 == s.surveys.end() || p1 == s.surveys.end()) continue;
      auto v0 = p0->second.find(item);
      auto v1 = p1->second.find(item);
      if (v0 == p0->second.end() || v1 == p1->second.end()) continue;
      pre.push_back(v0->second);
      post.push_back(v1->second);
    }
    sc.pairs = pre.size();
    if (!pre.empty()) {
      for (std::size_t i = 0; i < pre.size(); ++i) {
        sc.pre_mean += pre[i];
        sc.post_mean += post[i];
      }
      sc.pre_mean /= pre.size();
      sc.post_mean /= post.size();
      sc.test = stats::wilcoxon_signed_rank(pre, post);
    } else {
      sc.note = "no paired responses";
    }
    r.surveys.push_back(sc);
  }

  std::vector<double> prior;
  std::vector<double> score;
  for (const auto& s : cohort) {
    auto pre = s.surveys.find("pre");
    if (pre == s.surveys.end() || !pre->second.contains(prior_use_item)) continue;
    const auto* a1 = s.last_attempt(first.id);
    if (!a1) continue;
    double passed = 0;
    bool complete = true;
    for (Dimension d : first.applicable_dimensions) {
      const auto o = outcome(s, a1->ref, d, human);
      if (!o) {
        complete = false;
        break;
      }
      passed += *o;
    }
    if (!complete || first.applicable_dimensions.empty()) continue;
    prior.push_back(pre->second.at(prior_use_item));
    score.push_back(passed / static_cast<double>(first.applicable_dimensions.size()));
  }
  try {
    r.prior_use_vs_first_score = stats::pearson_correlation(prior, score);
  } catch (const stats::StatsError& e) {
    r.correlation_note = e.what();
  }

  for (const std::string occasion : {"pre", "post"}) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& s : cohort) {
      auto f = s.test_form.find(occasion);
      if (f == s.test_form.end()) continue;
      const auto* form = bank.find_form(f->second);
      if (!form) continue;
      const auto fs = score_form(*form, bank, s.tests.at(occasion));
      if (fs.max <= 0) continue;
      sum += fs.total / fs.max;
      ++n;
    }
    r.test_counts[occasion] = n;
    if (n > 0) r.test_means[occasion] = sum / n;
  }
  return r;
}

json to_json(const LearningReport& r) {
  json dims = json::array();
  for (const auto& c : r.dimensions) {
    dims.push_back({{"dimension", to_string(c.dimension)},
                    {"pairs", c.pairs},
                    {"only_first", c.only_first},
                    {"only_last", c.only_last},
                    {"first_pass_rate", c.first_pass_rate},
                    {"last_pass_rate", c.last_pass_rate},
                    {"mcnemar", test_json(c.test)}});
  }
  json surveys = json::array();
  for (const auto& s : r.surveys) {
    json e = {{"item_id", s.item_id}, {"pairs", s.pairs}, {"pre_mean", s.pre_mean}, {"post_mean", s.post_mean}};
    e["wilcoxon"] = s.test ? test_json(*s.test) : json(nullptr);
    if (!s.note.empty()) e["note"] = s.note;
    surveys.push_back(e);
  }
  json corr = nullptr;
  if (r.prior_use_vs_first_score) {
    corr = {{"r", r.prior_use_vs_first_score->r},
            {"p_value", r.prior_use_vs_first_score->p_value},
            {"n", r.prior_use_vs_first_score->n}};
  }
  json out = {{"students", r.students},
              {"first_scenario", r.first_scenario},
              {"last_scenario", r.last_scenario},
              {"dimensions", dims},
              {"surveys", surveys},
              {"prior_use_item", r.prior_use_item},
              {"prior_use_vs_first_score", corr},
              {"test_mean_proportion", r.test_means},
              {"test_counts", r.test_counts}};
  if (!r.correlation_note.empty()) out["correlation_note"] = r.correlation_note;
  return out;
}

std::string render_text(const LearningReport& r) {
  std::ostringstream out;
  out << "Learning outcomes: " << r.students << " students, " << r.first_scenario << " -> " << r.last_scenario
      << "\n";
  out << pad("dimension", 22) << pad("pairs", 7) << pad("first", 8) << pad("last", 8) << pad("b", 5) << pad("c", 5)
      << "McNemar\n";
  for (const auto& c : r.dimensions) {
    out << pad(std::string(to_string(c.dimension)), 22) << pad(std::to_string(c.pairs), 7)
        << pad(fixed(c.first_pass_rate, 2), 8) << pad(fixed(c.last_pass_rate, 2), 8)
        << pad(std::to_string(c.only_first), 5) << pad(std::to_string(c.only_last), 5) << test_text(c.test) << '\n';
  }
  for (const auto& s : r.surveys) {
    out << "Survey " << s.item_id << ": pre " << fixed(s.pre_mean, 2) << ", post " << fixed(s.post_mean, 2) << " ("
        << s.pairs << " pairs); Wilcoxon " << (s.test ? test_text(*s.test) : s.note) << '\n';
  }
  if (r.prior_use_vs_first_score) {
    const auto& c = *r.prior_use_vs_first_score;
    out << "Prior use (" << r.prior_use_item << ") vs first-scenario score: r=" << fixed(c.r) << " p=" << fixed(c.p_value, 4)
        << " (n=" << c.n << ")\n";
  } else {
    out << "Prior use (" << r.prior_use_item << ") vs first-scenario score: n/a (" << r.correlation_note << ")\n";
  }
  for (const std::string occasion : {"pre", "post"}) {
    auto c = r.test_counts.find(occasion);
    if (c == r.test_counts.end()) continue;
    const std::size_t n = c->second;
    auto it = r.test_means.find(occasion);
    out << "Test " << occasion << ": mean proportion correct "
        << (it == r.test_means.end() ? std::string("-") : fixed(it->second)) << " (" << n << " students)\n";
  }
  return out.str();
}

json full_report(const Store& store, const std::vector<Scenario>& scenarios, const ItemBank& bank,
                 const std::string& test_form) {
  const auto sessions = summarize_store(store, bank);
  const auto cohort = completed_cohort(sessions);
  const auto labels = store.labels();
  json out = {{"sessions", sessions.size()}, {"completed_students", cohort.size()}};
  try {
    const auto& form = bank.form(test_form);
    out["items"] = to_json(analyze_items(cohort_matrix(cohort, bank, form, "pre", labels), bank, form.id, "pre"));
  } catch (const std::exception& e) {
    out["items"] = {{"error", e.what()}};
  }
  try {
    auto corpus = grader_corpus(sessions, labels);
    if (corpus.human.empty()) {
      out["grader"] = {{"error", "no human grade labels imported"}};
    } else {
      out["grader"] = to_json(analyze_grader(corpus));
    }
  } catch (const std::exception& e) {
    out["grader"] = {{"error", e.what()}};
  }
  try {
    out["learning"] = to_json(analyze_learning(cohort, scenarios, bank, labels));
  } catch (const std::exception& e) {
    out["learning"] = {{"error", e.what()}};
  }
  return out;
}

}  // namespace promptlit::analysis
