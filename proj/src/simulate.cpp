#include "promptlit/simulate.hpp"

#include <fstream>
#include <random>

#include "promptlit/service.hpp"

namespace promptlit {

using nlohmann::json;

namespace {

/// Integer-only draws so the stream does not depend on the standard
/// library's distribution implementations.
class Dice {
 public:
  explicit Dice(std::uint64_t seed) : rng_(seed) {}
  std::uint64_t below(std::uint64_t n) { return rng_() % n; }
  bool chance(long permille) { return static_cast<long>(below(1000)) < std::clamp(permille, 0L, 1000L); }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 rng_;
};

const std::vector<std::string> kContext = {"I am in grade 8 and", "I learned about this in my class but",
                                           "This is for my homework and"};
const std::vector<std::string> kAsk = {"can you explain {t}?", "please help me understand {t}.", "quiz me on {t}.",
                                       "describe {t} for me.", "list the main ideas about {t}."};
const std::vector<std::string> kVague = {"tell me about {t}.", "{t}?", "what about {t}"};
const std::vector<std::string> kOffTopic = {"can you explain this?", "help me with my stuff.", "tell me something."};
const std::vector<std::string> kElaborate = {"Why does it work that way?", "Please give an example.",
                                             "Show me the steps."};
const std::vector<std::string> kAnswer = {"What is the answer?", "Just give me the answer."};
const std::string kFiller =
    "I would really like this to be clear and simple because sometimes long answers are hard to follow and I get "
    "lost when there are too many words at once so please keep it short and friendly and use easy words that a "
    "student can read quickly without getting confused by the long sentences or the big words";

std::string fill(std::string pattern, const std::string& topic) {
  const auto pos = pattern.find("{t}");
  if (pos != std::string::npos) pattern.replace(pos, 3, topic);
  return pattern;
}

std::string compose_prompt(Dice& dice, const Scenario& scenario, long skill) {
  std::vector<std::string> parts;
  if (dice.chance(200 + skill / 2)) parts.push_back(dice.pick(kContext));
  const bool on_topic = dice.chance(700 + skill / 4);
  const std::string topic = dice.pick(scenario.topic_terms);
  if (!on_topic) {
    parts.push_back(dice.pick(kOffTopic));
  } else if (dice.chance(400 + skill / 2)) {
    parts.push_back(fill(dice.pick(kAsk), topic));
  } else {
    parts.push_back(fill(dice.pick(kVague), topic));
  }
  if (dice.chance(300 + skill / 2)) parts.push_back(dice.pick(kElaborate));
  if (dice.chance(std::max(50L, 450 - skill / 2))) {
    parts.push_back(scenario.subject == "math" && dice.chance(500) ? "What are x and y?" : dice.pick(kAnswer));
  }
  if (dice.chance(80)) parts.push_back(kFiller);
  return text::join(parts, " ");
}

/// Per-mille probability of a correct answer.
long correct_permille(long ability, std::size_t item_index, bool post) {
  const long hardness = static_cast<long>((item_index * 37) % 7) * 50 - 150;
  return std::clamp(250 + ability * 6 / 10 - hardness + (post ? 80 : 0), 50L, 970L);
}

json answer_test(Dice& dice, const AssessmentForm& form, const ItemBank& bank, long ability, bool post) {
  json answers = json::object();
  for (std::size_t i = 0; i < form.item_ids.size(); ++i) {
    const auto& item = bank.item(form.item_ids[i]);
    const bool right = dice.chance(correct_permille(ability, i, post));
    switch (item.kind) {
      case ItemKind::MCQ: {
        const auto key = std::get<std::size_t>(item.correct);
        answers[item.id] = right ? key : (key + 1 + dice.below(item.options.size() - 1)) % item.options.size();
        break;
      }
      case ItemKind::TF:
        answers[item.id] = right ? std::get<bool>(item.correct) : !std::get<bool>(item.correct);
        break;
      case ItemKind::OE:
        answers[item.id] = right ? "A chatbot can explain ideas step by step, but it can be wrong, so I check it."
                                 : "I am not sure.";
        break;
      case ItemKind::Likert5:
        answers[item.id] = 3;
        break;
    }
  }
  return answers;
}

int likert(long value) { return static_cast<int>(std::clamp(value, 1L, 5L)); }

}  // namespace

SimulationResult simulate_cohort(Store& store, const std::vector<Scenario>& scenarios, const ItemBank& bank,
                                 const SimulationOptions& options) {
  Dice dice(options.seed);
  // 2025-01-06T09:00:00Z, advanced by a fixed step per call.
  auto now = std::make_shared<Timestamp>(Timestamp(std::chrono::milliseconds(1736154000000LL)));
  auto counter = std::make_shared<std::size_t>(0);
  ServiceDeps deps;
  deps.clock = [now] {
    *now += std::chrono::milliseconds(1500);
    return *now;
  };
  const std::uint64_t seed = options.seed;
  deps.new_session_id = [counter, seed] {
    char buf[48];
    std::snprintf(buf, sizeof buf, "sim%llu-%04zu", static_cast<unsigned long long>(seed), ++*counter);
    return std::string(buf);
  };
  ServiceOptions so;
  so.backend = Backend::Mock;
  so.test_form = options.test_form;
  PracticeService service(store, scenarios, bank, so, deps);
  const auto& form = bank.form(options.test_form);

  std::vector<Label> labels;
  SimulationResult result;
  for (std::size_t s = 0; s < options.students; ++s) {
    char student[32];
    std::snprintf(student, sizeof student, "student-%03zu", s + 1);
    const long ability = static_cast<long>(dice.below(1001));

    const std::string id = service.create_session({{"student_id", student}})["session_id"];
    ++result.sessions;

    json pre_survey = json::object();
    const int lk4_pre = likert(1 + static_cast<long>(dice.below(3)) + (ability > 500 ? 1 : 0));
    for (const auto& item : bank.pre_survey) {
      if (item == "LK1") {
        pre_survey[item] = likert(1 + ability * 4 / 1000 + static_cast<long>(dice.below(3)) - 1);
      } else if (item == "LK4") {
        pre_survey[item] = lk4_pre;
      } else {
        pre_survey[item] = likert(2 + static_cast<long>(dice.below(4)));
      }
    }
    service.submit_survey(id, {{"answers", pre_survey}});
    const json pre_answers = answer_test(dice, form, bank, ability, false);
    service.submit_test(id, {{"answers", pre_answers}});

    for (const auto& w : bank.warmup) {
      const bool right = dice.chance(500 + ability / 3);
      const std::size_t choice = right ? w.correct : (w.correct + 1) % w.options.size();
      service.submit_warmup(id, {{"item_id", w.id}, {"choice", choice}});
    }
    service.advance(id, {{"choice", "next"}});

    for (std::size_t sc = 0; sc < scenarios.size(); ++sc) {
      const int attempts = 1 + static_cast<int>(dice.below(3));
      for (int k = 0; k < attempts; ++k) {
        const long skill = ability * 6 / 10 + static_cast<long>(sc) * 120 + k * 100;
        const std::string prompt = compose_prompt(dice, scenarios[sc], skill);
        service.submit_prompt(id, {{"text", prompt}});
        ++result.attempts;
        const json report = service.check(id)["report"];
        if (options.labels) {
          const AttemptRef ref{id, scenarios[sc].id, k + 1};
          for (const auto& [dim, verdict] : report["verdicts"].items()) {
            const Dimension d = *parse_dimension(dim);
            const bool flip = dice.chance(options.label_flip_permille);
            labels.emplace_back(HumanGrade{ref, d, verdict["pass"].get<bool>() != flip});
            const auto roll = dice.below(100);
            labels.emplace_back(ExplanationRating{ref, d, roll < 85 ? 1.0 : (roll < 95 ? 0.5 : 0.0)});
          }
        }
        service.advance(id, {{"choice", k + 1 < attempts ? "retry" : "next"}});
      }
    }

    const json post_answers = answer_test(dice, form, bank, ability, true);
    service.submit_test(id, {{"answers", post_answers}});
    json post_survey = json::object();
    for (const auto& item : bank.post_survey) {
      post_survey[item] = item == "LK4" ? likert(lk4_pre + static_cast<long>(dice.below(3))) : 3;
    }
    service.submit_survey(id, {{"answers", post_survey}});
    json reflection = json::object();
    for (const auto& r : bank.reflection) reflection[r.id] = "I learned to give the chatbot more context.";
    service.submit_reflection(id, {{"answers", reflection}});

    if (options.labels) {
      for (const auto& [occasion, answers] : {std::pair{"pre", pre_answers}, std::pair{"post", post_answers}}) {
        for (const auto& item_id : form.item_ids) {
          if (bank.item(item_id).kind != ItemKind::OE) continue;
          const std::string text = answers.value(item_id, std::string());
          const bool good = text.size() > 20 && !dice.chance(100);
          labels.emplace_back(OpenEndedLabel{student, item_id, occasion, good ? 1 : 0});
        }
      }
    }
  }
  if (!labels.empty()) store.append_labels(labels, deps.clock());

  result.responses_csv = service.export_table("responses");
  result.attempts_csv = service.export_table("attempts");
  result.grades_csv = service.export_table("grades");
  result.labels_csv = service.export_table("labels");
  return result;
}

void write_simulation(const SimulationResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::pair<const char*, const std::string*> files[] = {{"responses.csv", &result.responses_csv},
                                                              {"attempts.csv", &result.attempts_csv},
                                                              {"grades.csv", &result.grades_csv},
                                                              {"labels.csv", &result.labels_csv}};
  for (const auto& [name, body] : files) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << *body;
    if (!out) throw IoError("cannot write " + (dir / name).string());
  }
}

}  // namespace promptlit
