#include "promptlit/assessment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <set>

#include "promptlit/csv.hpp"

namespace promptlit {

namespace {

std::string scalar(const YAML::Node& node) {
  if (!node || !node.IsScalar()) return {};
  return node.as<std::string>();
}

std::vector<std::string> string_list(const YAML::Node& node) {
  std::vector<std::string> out;
  if (!node || !node.IsSequence()) return out;
  for (const auto& n : node) out.push_back(scalar(n));
  return out;
}

std::optional<bool> parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  return std::nullopt;
}

std::optional<std::size_t> parse_index(const std::string& s) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(std::stoul(s));
}

// Required LO per position for the iterated form: TF1-6 AICapacity, TF7-10
// contexts; OE1 capacity, OE2-3 contexts, OE4-5 prompt formation.
LearningObjective expected_tf_objective(std::size_t pos) {
  return pos < 6 ? LearningObjective::AICapacity : LearningObjective::ContextsToUseAI;
}
LearningObjective expected_oe_objective(std::size_t pos) {
  if (pos == 0) return LearningObjective::AICapacity;
  if (pos < 3) return LearningObjective::ContextsToUseAI;
  return LearningObjective::EffectivePromptFormation;
}

}  // namespace

std::string_view to_string(ItemKind k) {
  switch (k) {
    case ItemKind::MCQ: return "MCQ";
    case ItemKind::TF: return "TF";
    case ItemKind::OE: return "OE";
    case ItemKind::Likert5: return "Likert5";
  }
  return "MCQ";
}

std::optional<ItemKind> parse_item_kind(std::string_view name) {
  for (ItemKind k : {ItemKind::MCQ, ItemKind::TF, ItemKind::OE, ItemKind::Likert5}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(Abstraction a) {
  return a == Abstraction::Abstract ? "abstract" : "concrete_scenario";
}

std::string_view to_string(FormVersion v) {
  return v == FormVersion::OriginalV1 ? "original_v1" : "iterated_v2";
}

const AssessmentItem* ItemBank::find_item(std::string_view id) const {
  for (const auto& i : items) {
    if (i.id == id) return &i;
  }
  return nullptr;
}

const AssessmentForm* ItemBank::find_form(std::string_view id) const {
  for (const auto& f : forms) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

const AssessmentItem& ItemBank::item(std::string_view id) const {
  if (const auto* i = find_item(id)) return *i;
  throw AssessmentError(AssessmentError::Kind::UnknownItem, "unknown item '" + std::string(id) + "'");
}

const AssessmentForm& ItemBank::form(std::string_view id) const {
  if (const auto* f = find_form(id)) return *f;
  throw AssessmentError(AssessmentError::Kind::UnknownItem, "unknown form '" + std::string(id) + "'");
}

std::vector<std::pair<std::string, LearningObjective>> ItemBank::lo_mapping(
    const AssessmentForm& f) const {
  std::vector<std::pair<std::string, LearningObjective>> out;
  for (const auto& id : f.item_ids) out.emplace_back(id, item(id).learning_objective);
  return out;
}

Validated<ItemBank> validate_item_bank(std::string_view document) {
  Validated<ItemBank> result;
  auto fail = [&](std::string path, std::string message) {
    result.errors.push_back({std::move(path), std::move(message)});
  };
  YAML::Node root;
  try {
    root = YAML::Load(std::string(document));
  } catch (const YAML::Exception& e) {
    fail("", std::string("unparseable document: ") + e.what());
    return result;
  }
  if (!root.IsMap() || !root["items"] || !root["items"].IsSequence()) {
    fail("items", "expected a list of items");
    return result;
  }

  ItemBank& bank = result.value;
  std::set<std::string> ids;
  const YAML::Node items = root["items"];
  for (std::size_t i = 0; i < items.size(); ++i) {
    const YAML::Node n = items[i];
    const std::string base = "items[" + std::to_string(i) + "]";
    AssessmentItem item;
    item.id = text::trim(scalar(n["id"]));
    item.stem = text::trim(scalar(n["stem"]));
    if (item.id.empty()) {
      fail(base + ".id", "missing item id");
    } else if (!ids.insert(item.id).second) {
      fail(base + ".id", "duplicate item id '" + item.id + "'");
    }
    if (item.stem.empty()) fail(base + ".stem", "empty stem");

    const std::string kind = scalar(n["kind"]);
    if (auto k = parse_item_kind(kind)) {
      item.kind = *k;
    } else {
      fail(base + ".kind", "unknown item kind '" + kind + "'");
      continue;
    }
    const std::string lo = scalar(n["learning_objective"]);
    if (auto parsed = parse_learning_objective(lo)) {
      item.learning_objective = *parsed;
    } else {
      fail(base + ".learning_objective", "unknown learning objective '" + lo + "'");
    }
    const std::string abstraction = scalar(n["abstraction"]);
    if (abstraction == "abstract") {
      item.abstraction = Abstraction::Abstract;
    } else if (abstraction == "concrete_scenario") {
      item.abstraction = Abstraction::ConcreteScenario;
    } else {
      fail(base + ".abstraction", "unknown abstraction '" + abstraction + "'");
    }

    const YAML::Node correct = n["correct"];
    item.options = string_list(n["options"]);
    switch (item.kind) {
      case ItemKind::MCQ: {
        if (item.options.size() != 3) {
          fail(base + ".options", "MCQ must have exactly 3 options, found " +
                                      std::to_string(item.options.size()));
        }
        if (!correct) {
          fail(base + ".correct", "MCQ must have exactly one correct option");
        } else if (correct.IsSequence()) {
          if (correct.size() != 1) {
            fail(base + ".correct", "MCQ must have exactly one correct option");
          } else if (auto idx = parse_index(scalar(correct[0]))) {
            item.correct = *idx;
          }
        } else if (auto idx = parse_index(scalar(correct))) {
          item.correct = *idx;
        } else {
          fail(base + ".correct", "MCQ key must be a zero-based option index");
        }
        if (auto* idx = std::get_if<std::size_t>(&item.correct); idx && *idx >= item.options.size()) {
          fail(base + ".correct", "correct option index out of range");
        }
        break;
      }
      case ItemKind::TF:
        if (!item.options.empty()) fail(base + ".options", "TF items take no options");
        if (auto b = parse_bool(scalar(correct))) {
          item.correct = *b;
        } else {
          fail(base + ".correct", "TF key must be true or false");
        }
        break;
      case ItemKind::OE:
      case ItemKind::Likert5:
        if (correct) fail(base + ".correct", std::string(to_string(item.kind)) + " items have no correct key");
        if (!item.options.empty()) fail(base + ".options", std::string(to_string(item.kind)) + " items take no options");
        break;
    }
    bank.items.push_back(std::move(item));
  }

  auto check_refs = [&](const std::string& path, const std::vector<std::string>& refs,
                        std::optional<ItemKind> required) {
    for (std::size_t j = 0; j < refs.size(); ++j) {
      const auto* item = bank.find_item(refs[j]);
      const std::string p = path + "[" + std::to_string(j) + "]";
      if (!item) {
        fail(p, "unknown item '" + refs[j] + "'");
      } else if (required && item->kind != *required) {
        fail(p, "item '" + refs[j] + "' must be " + std::string(to_string(*required)));
      }
    }
  };

  const YAML::Node forms = root["forms"];
  if (forms && forms.IsSequence()) {
    std::set<std::string> form_ids;
    for (std::size_t i = 0; i < forms.size(); ++i) {
      const YAML::Node n = forms[i];
      const std::string base = "forms[" + std::to_string(i) + "]";
      AssessmentForm form;
      form.id = text::trim(scalar(n["id"]));
      if (form.id.empty() || !form_ids.insert(form.id).second) {
        fail(base + ".id", "missing or duplicate form id");
      }
      const std::string version = scalar(n["version"]);
      if (version == "original_v1") {
        form.version = FormVersion::OriginalV1;
      } else if (version == "iterated_v2") {
        form.version = FormVersion::IteratedV2;
      } else {
        fail(base + ".version", "unknown form version '" + version + "'");
        continue;
      }
      form.item_ids = string_list(n["items"]);
      const std::size_t before = result.errors.size();
      check_refs(base + ".items", form.item_ids, std::nullopt);
      if (result.errors.size() == before) {
        std::vector<const AssessmentItem*> tf;
        std::vector<const AssessmentItem*> oe;
        std::size_t mcq = 0;
        std::size_t other = 0;
        for (const auto& id : form.item_ids) {
          const auto& item = bank.item(id);
          if (item.kind == ItemKind::MCQ) ++mcq;
          else if (item.kind == ItemKind::TF) tf.push_back(&item);
          else if (item.kind == ItemKind::OE) oe.push_back(&item);
          else ++other;
        }
        if (form.version == FormVersion::OriginalV1) {
          if (mcq != 6 || form.item_ids.size() != 6) {
            fail(base + ".items", "original_v1 form must consist of exactly 6 MCQs");
          }
        } else {
          if (tf.size() != 10 || oe.size() != 5 || mcq != 0 || other != 0) {
            fail(base + ".items", "iterated_v2 form must consist of exactly 10 TF and 5 OE items");
          } else {
            for (std::size_t k = 0; k < tf.size(); ++k) {
              if (tf[k]->learning_objective != expected_tf_objective(k)) {
                fail(base + ".items", "TF" + std::to_string(k + 1) + " (" + tf[k]->id + ") must target " +
                                          std::string(to_string(expected_tf_objective(k))));
              }
            }
            for (std::size_t k = 0; k < oe.size(); ++k) {
              if (oe[k]->learning_objective != expected_oe_objective(k)) {
                fail(base + ".items", "OE" + std::to_string(k + 1) + " (" + oe[k]->id + ") must target " +
                                          std::string(to_string(expected_oe_objective(k))));
              }
            }
          }
        }
      }
      bank.forms.push_back(std::move(form));
    }
  }

  if (const YAML::Node surveys = root["surveys"]) {
    bank.pre_survey = string_list(surveys["pre"]);
    bank.post_survey = string_list(surveys["post"]);
    check_refs("surveys.pre", bank.pre_survey, ItemKind::Likert5);
    check_refs("surveys.post", bank.post_survey, ItemKind::Likert5);
  }

  if (const YAML::Node warmup = root["warmup"]; warmup && warmup.IsSequence()) {
    for (std::size_t i = 0; i < warmup.size(); ++i) {
      const YAML::Node n = warmup[i];
      const std::string base = "warmup[" + std::to_string(i) + "]";
      WarmupItem w;
      w.id = scalar(n["id"]);
      w.stem = scalar(n["stem"]);
      w.options = string_list(n["options"]);
      w.hint = scalar(n["hint"]);
      w.feedback = scalar(n["feedback"]);
      auto idx = parse_index(scalar(n["correct"]));
      if (w.id.empty() || w.stem.empty()) fail(base, "warm-up item needs id and stem");
      if (w.options.size() < 2) fail(base + ".options", "warm-up item needs at least 2 options");
      if (!idx || *idx >= w.options.size()) {
        fail(base + ".correct", "warm-up key must index an option");
      } else {
        w.correct = *idx;
      }
      if (w.hint.empty() || w.feedback.empty()) fail(base, "warm-up item needs hint and feedback");
      bank.warmup.push_back(std::move(w));
    }
  }

  if (const YAML::Node reflection = root["reflection"]; reflection && reflection.IsSequence()) {
    for (std::size_t i = 0; i < reflection.size(); ++i) {
      ReflectionPrompt r{scalar(reflection[i]["id"]), scalar(reflection[i]["prompt"])};
      if (r.id.empty() || r.prompt.empty()) {
        fail("reflection[" + std::to_string(i) + "]", "reflection prompt needs id and prompt");
      }
      bank.reflection.push_back(std::move(r));
    }
  }

  if (!result.ok()) result.value = {};
  return result;
}

std::string describe(const Response& r) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ChoiceResponse>) return std::to_string(v.index);
        else if constexpr (std::is_same_v<T, TruthResponse>) return v.value ? "true" : "false";
        else if constexpr (std::is_same_v<T, TextResponse>) return v.text;
        else return std::to_string(v.value);
      },
      r);
}

Response response_from_json(const AssessmentItem& item, const nlohmann::json& value) {
  auto bad = [&](const std::string& what) {
    return AssessmentError(AssessmentError::Kind::InvalidResponse, "item '" + item.id + "' expects " + what);
  };
  switch (item.kind) {
    case ItemKind::MCQ:
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0 ||
          value.get<std::uint64_t>() >= item.options.size()) {
        throw bad("an option index below " + std::to_string(item.options.size()));
      }
      return ChoiceResponse{value.get<std::size_t>()};
    case ItemKind::TF:
      if (!value.is_boolean()) throw bad("true or false");
      return TruthResponse{value.get<bool>()};
    case ItemKind::OE:
      if (!value.is_string()) throw bad("a text answer");
      return TextResponse{value.get<std::string>()};
    case ItemKind::Likert5:
      if (!value.is_number_integer() || value.get<int>() < 1 || value.get<int>() > 5) {
        throw bad("an integer from 1 to 5");
      }
      return LikertResponse{value.get<int>()};
  }
  throw bad("a known item kind");
}

nlohmann::json response_to_json(const Response& r) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ChoiceResponse>) return v.index;
        else if constexpr (std::is_same_v<T, TruthResponse>) return v.value;
        else if constexpr (std::is_same_v<T, TextResponse>) return v.text;
        else return v.value;
      },
      r);
}

int score_objective(const AssessmentItem& item, const Response& response) {
  if (item.kind == ItemKind::MCQ) {
    const auto* choice = std::get_if<ChoiceResponse>(&response);
    if (!choice) {
      throw AssessmentError(AssessmentError::Kind::InvalidResponse,
                            "item '" + item.id + "' expects an option choice");
    }
    return choice->index == std::get<std::size_t>(item.correct) ? 1 : 0;
  }
  if (item.kind == ItemKind::TF) {
    const auto* truth = std::get_if<TruthResponse>(&response);
    if (!truth) {
      throw AssessmentError(AssessmentError::Kind::InvalidResponse,
                            "item '" + item.id + "' expects true or false");
    }
    return truth->value == std::get<bool>(item.correct) ? 1 : 0;
  }
  throw AssessmentError(AssessmentError::Kind::KindMismatch,
                        "item '" + item.id + "' of kind " + std::string(to_string(item.kind)) +
                            " has no objective key");
}

FormScore score_form(const AssessmentForm& form, const ItemBank& bank,
                     const std::map<std::string, Response>& responses) {
  for (const auto& [id, _] : responses) {
    if (std::find(form.item_ids.begin(), form.item_ids.end(), id) == form.item_ids.end()) {
      throw AssessmentError(AssessmentError::Kind::UnknownItem,
                            "item '" + id + "' is not on form '" + form.id + "'");
    }
  }
  FormScore score;
  for (const auto& id : form.item_ids) {
    const auto& item = bank.item(id);
    if (!is_objective(item.kind)) continue;
    score.max += 1;
    score.per_objective.try_emplace(item.learning_objective, 0.0);
    auto it = responses.find(id);
    if (it == responses.end()) {
      score.missing.push_back(id);
      continue;
    }
    const int s = score_objective(item, it->second);
    score.total += s;
    score.per_objective[item.learning_objective] += s;
  }
  return score;
}

int likert_delta(int pre, int post) {
  if (pre < 1 || pre > 5 || post < 1 || post > 5) {
    throw AssessmentError(AssessmentError::Kind::OutOfRange, "Likert values must lie in 1..5");
  }
  return post - pre;
}

ResponseMatrix::ResponseMatrix(std::vector<std::string> students, std::vector<std::string> items)
    : students_(std::move(students)),
      items_(std::move(items)),
      cells_(students_.size() * items_.size(), Cell::Missing) {}

std::vector<Cell> ResponseMatrix::column(std::size_t col) const {
  std::vector<Cell> out;
  out.reserve(rows());
  for (std::size_t r = 0; r < rows(); ++r) out.push_back(at(r, col));
  return out;
}

std::optional<std::size_t> ResponseMatrix::column_index(std::string_view item) const {
  for (std::size_t c = 0; c < items_.size(); ++c) {
    if (items_[c] == item) return c;
  }
  return std::nullopt;
}

std::vector<int> ResponseMatrix::totals() const {
  std::vector<int> out(rows(), 0);
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < cols(); ++c) out[r] += at(r, c) == Cell::Right ? 1 : 0;
  }
  return out;
}

bool ResponseMatrix::has_missing() const {
  return std::find(cells_.begin(), cells_.end(), Cell::Missing) != cells_.end();
}

ResponseMatrix ResponseMatrix::complete_rows() const {
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < rows(); ++r) {
    bool complete = true;
    for (std::size_t c = 0; c < cols(); ++c) complete = complete && at(r, c) != Cell::Missing;
    if (complete) keep.push_back(r);
  }
  std::vector<std::string> students;
  for (auto r : keep) students.push_back(students_[r]);
  ResponseMatrix out(std::move(students), items_);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (std::size_t c = 0; c < cols(); ++c) out.set(i, c, at(keep[i], c));
  }
  return out;
}

ResponseMatrix ResponseMatrix::select_items(const std::vector<std::string>& items) const {
  ResponseMatrix out(students_, items);
  for (std::size_t c = 0; c < items.size(); ++c) {
    auto src = column_index(items[c]);
    if (!src) {
      throw AssessmentError(AssessmentError::Kind::UnknownItem, "matrix has no column '" + items[c] + "'");
    }
    for (std::size_t r = 0; r < rows(); ++r) out.set(r, c, at(r, *src));
  }
  return out;
}

ResponseMatrix build_response_matrix(const AssessmentForm& form, const ItemBank& bank,
                                     const std::vector<StudentResponses>& cohort,
                                     const OpenEndedScores& oe_scores) {
  if (cohort.empty()) throw PreconditionError("response matrix needs at least one student");
  std::vector<std::string> columns;
  for (const auto& id : form.item_ids) {
    const auto& item = bank.item(id);
    if (is_objective(item.kind)) {
      columns.push_back(id);
    } else if (item.kind == ItemKind::OE) {
      const bool scored = std::any_of(oe_scores.begin(), oe_scores.end(),
                                      [&](const auto& kv) { return kv.first.second == id; });
      if (scored) columns.push_back(id);
    }
  }
  std::vector<std::string> students;
  for (const auto& s : cohort) students.push_back(s.student_id);
  ResponseMatrix m(std::move(students), columns);
  for (std::size_t r = 0; r < cohort.size(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto& item = bank.item(columns[c]);
      if (item.kind == ItemKind::OE) {
        auto it = oe_scores.find({cohort[r].student_id, item.id});
        if (it != oe_scores.end()) m.set(r, c, it->second != 0 ? Cell::Right : Cell::Wrong);
        continue;
      }
      auto it = cohort[r].responses.find(item.id);
      if (it != cohort[r].responses.end()) {
        m.set(r, c, score_objective(item, it->second) == 1 ? Cell::Right : Cell::Wrong);
      }
    }
  }
  return m;
}

ResponseMatrix parse_matrix_csv(std::string_view document) {
  const auto rows = csv::parse(document);
  if (rows.empty() || rows.front().size() < 2 || rows.front().front() != "student") {
    throw PreconditionError("matrix CSV must start with a 'student' header column");
  }
  std::vector<std::string> items(rows.front().begin() + 1, rows.front().end());
  std::vector<std::string> students;
  for (std::size_t r = 1; r < rows.size(); ++r) students.push_back(rows[r].at(0));
  ResponseMatrix m(std::move(students), items);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != items.size() + 1) {
      throw PreconditionError("matrix CSV row " + std::to_string(r) + " is not rectangular");
    }
    for (std::size_t c = 0; c < items.size(); ++c) {
      const std::string v = text::trim(rows[r][c + 1]);
      if (v == "1") m.set(r - 1, c, Cell::Right);
      else if (v == "0") m.set(r - 1, c, Cell::Wrong);
      else if (v.empty()) m.set(r - 1, c, Cell::Missing);
      else throw PreconditionError("matrix CSV cell must be 0, 1 or empty, got '" + v + "'");
    }
  }
  return m;
}

std::string matrix_to_csv(const ResponseMatrix& m) {
  csv::Row header{"student"};
  header.insert(header.end(), m.items().begin(), m.items().end());
  std::string out = csv::format_row(header);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    csv::Row row{m.students()[r]};
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const Cell v = m.at(r, c);
      row.push_back(v == Cell::Missing ? "" : (v == Cell::Right ? "1" : "0"));
    }
    out += csv::format_row(row);
  }
  return out;
}

}  // namespace promptlit
