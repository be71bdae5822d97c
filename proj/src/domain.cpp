#include "promptlit/domain.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace promptlit {

namespace {

struct DimensionInfo {
  Dimension id;
  std::string_view name;
  std::string_view label;
  std::string_view definition;
};

constexpr std::array<DimensionInfo, 6> kDimensionInfo = {{
    {Dimension::Relevance, "Relevance", "Relevance", "The prompt is related to the topic."},
    {Dimension::ClarityOfPurpose, "ClarityOfPurpose", "Purpose",
     "The prompt identifies a specific and clear purpose."},
    {Dimension::Conciseness, "Conciseness", "Conciseness", "The prompt itself is brief and concise."},
    {Dimension::BackgroundContext, "BackgroundContext", "Background",
     "The prompt explains why the question is being asked, for example by giving the background."},
    {Dimension::RequestElaboration, "RequestElaboration", "Elaboration",
     "The prompt requests elaboration, extension, or explanation rather than a direct response."},
    {Dimension::NoDirectAnswer, "NoDirectAnswer", "No Answer",
     "The prompt does not ask for the solution to a problem or for the answers themselves."},
}};

const DimensionInfo& info(Dimension d) { return kDimensionInfo[static_cast<std::size_t>(d)]; }

constexpr std::array<std::pair<LearningObjective, std::string_view>, 3> kObjectives = {{
    {LearningObjective::AICapacity, "AICapacity"},
    {LearningObjective::ContextsToUseAI, "ContextsToUseAI"},
    {LearningObjective::EffectivePromptFormation, "EffectivePromptFormation"},
}};

std::string scalar_or_empty(const YAML::Node& node) {
  if (!node || !node.IsScalar()) return {};
  return node.as<std::string>();
}

}  // namespace

std::string_view to_string(Dimension d) { return info(d).name; }
std::string_view short_label(Dimension d) { return info(d).label; }
std::string_view general_definition(Dimension d) { return info(d).definition; }

std::optional<Dimension> parse_dimension(std::string_view name) {
  for (const auto& i : kDimensionInfo) {
    if (i.name == name) return i.id;
  }
  return std::nullopt;
}

std::string_view to_string(LearningObjective lo) {
  return kObjectives[static_cast<std::size_t>(lo)].second;
}

std::optional<LearningObjective> parse_learning_objective(std::string_view name) {
  for (const auto& [lo, n] : kObjectives) {
    if (n == name) return lo;
  }
  return std::nullopt;
}

std::string_view to_string(GraderKind k) {
  switch (k) {
    case GraderKind::Llm: return "llm";
    case GraderKind::Mock: return "mock";
    case GraderKind::Human: return "human";
  }
  return "mock";
}

std::optional<GraderKind> parse_grader_kind(std::string_view name) {
  if (name == "llm") return GraderKind::Llm;
  if (name == "mock") return GraderKind::Mock;
  if (name == "human") return GraderKind::Human;
  return std::nullopt;
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()),
                static_cast<int>(hms.subseconds().count()));
  return buf;
}

Timestamp parse_timestamp(std::string_view iso) {
  using namespace std::chrono;
  int y = 0;
  unsigned mo = 0;
  unsigned d = 0;
  int h = 0;
  int mi = 0;
  int s = 0;
  int ms = 0;
  const std::string str(iso);
  const int n = std::sscanf(str.c_str(), "%d-%u-%uT%d:%d:%d.%dZ", &y, &mo, &d, &h, &mi, &s, &ms);
  if (n < 6) throw PreconditionError("malformed timestamp: " + str);
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok()) throw PreconditionError("malformed timestamp: " + str);
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms};
}

std::string_view Scenario::description_of(Dimension d) const {
  if (auto it = dimension_descriptions.find(d); it != dimension_descriptions.end()) {
    return it->second;
  }
  return general_definition(d);
}

bool Scenario::applies(Dimension d) const {
  return std::find(applicable_dimensions.begin(), applicable_dimensions.end(), d) !=
         applicable_dimensions.end();
}

std::vector<Dimension> scenario_dimensions(const Scenario& scenario) {
  std::vector<Dimension> dims = scenario.applicable_dimensions;
  std::sort(dims.begin(), dims.end());
  dims.erase(std::unique(dims.begin(), dims.end()), dims.end());
  return dims;
}

std::string AttemptRef::key() const {
  return session_id + "/" + scenario_id + "/" + std::to_string(attempt_index);
}

std::vector<std::string> grade_report_violations(const GradeReport& report,
                                                 const std::vector<Dimension>& expected) {
  std::vector<std::string> out;
  for (Dimension d : expected) {
    if (!report.verdicts.contains(d)) out.push_back("missing verdict for " + std::string(to_string(d)));
  }
  for (const auto& [d, v] : report.verdicts) {
    if (std::find(expected.begin(), expected.end(), d) == expected.end()) {
      out.push_back("unexpected verdict for " + std::string(to_string(d)));
    }
    if (text::is_blank(v.explanation)) {
      out.push_back("empty explanation for " + std::string(to_string(d)));
    }
  }
  return out;
}

ContentError::ContentError(std::vector<ValidationError> errors)
    : Error([&] {
        std::string msg = "content validation failed";
        for (const auto& e : errors) msg += "\n  " + e.to_string();
        return msg;
      }()),
      errors_(std::move(errors)) {}

Validated<std::vector<Scenario>> validate_scenario_config(std::string_view document) {
  Validated<std::vector<Scenario>> result;
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
  if (!root.IsMap() || !root["scenarios"] || !root["scenarios"].IsSequence()) {
    fail("scenarios", "expected a list of scenarios");
    return result;
  }

  std::set<std::string> seen_ids;
  const YAML::Node list = root["scenarios"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const YAML::Node node = list[i];
    const std::string base = "scenarios[" + std::to_string(i) + "]";
    if (!node.IsMap()) {
      fail(base, "expected a mapping");
      continue;
    }
    Scenario s;
    s.id = text::trim(scalar_or_empty(node["id"]));
    s.subject = text::trim(scalar_or_empty(node["subject"]));
    s.title = text::trim(scalar_or_empty(node["title"]));
    s.narrative = text::trim(scalar_or_empty(node["narrative"]));

    if (s.id.empty()) {
      fail(base + ".id", "missing scenario id");
    } else if (!seen_ids.insert(s.id).second) {
      fail(base + ".id", "duplicate scenario id '" + s.id + "'");
    }
    if (s.subject.empty()) fail(base + ".subject", "missing subject");
    if (s.title.empty()) fail(base + ".title", "missing title");
    if (s.narrative.empty()) fail(base + ".narrative", "empty narrative");

    const std::string lo = scalar_or_empty(node["learning_objective"]);
    if (auto parsed = parse_learning_objective(lo)) {
      s.learning_objective = *parsed;
    } else {
      fail(base + ".learning_objective", "unknown learning objective '" + lo + "'");
    }

    const YAML::Node dims = node["dimensions"];
    if (!dims || !dims.IsSequence() || dims.size() == 0) {
      fail(base + ".dimensions", "at least one dimension is required");
    } else {
      for (std::size_t j = 0; j < dims.size(); ++j) {
        const std::string dpath = base + ".dimensions[" + std::to_string(j) + "]";
        const YAML::Node dn = dims[j];
        std::string name;
        std::string description;
        if (dn.IsScalar()) {
          name = dn.as<std::string>();
        } else if (dn.IsMap()) {
          name = scalar_or_empty(dn["id"]);
          description = text::trim(scalar_or_empty(dn["description"]));
        }
        auto dim = parse_dimension(name);
        if (!dim) {
          fail(dpath, "unknown dimension '" + name + "'");
          continue;
        }
        if (s.applies(*dim)) {
          fail(dpath, "dimension '" + name + "' listed twice");
          continue;
        }
        s.applicable_dimensions.push_back(*dim);
        if (!description.empty()) s.dimension_descriptions[*dim] = description;
      }
      std::sort(s.applicable_dimensions.begin(), s.applicable_dimensions.end());
    }

    const YAML::Node terms = node["topic_terms"];
    if (terms && terms.IsSequence()) {
      for (const auto& t : terms) {
        std::string term = text::to_lower(text::trim(scalar_or_empty(t)));
        if (!term.empty() && std::find(s.topic_terms.begin(), s.topic_terms.end(), term) ==
                                 s.topic_terms.end()) {
          s.topic_terms.push_back(std::move(term));
        }
      }
    } else if (terms) {
      fail(base + ".topic_terms", "expected a list of keywords");
    }
    result.value.push_back(std::move(s));
  }
  if (!result.ok()) result.value.clear();
  return result;
}

std::string serialize_scenarios(const std::vector<Scenario>& scenarios) {
  YAML::Emitter out;
  out << YAML::BeginMap << YAML::Key << "scenarios" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : scenarios) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << s.id;
    out << YAML::Key << "subject" << YAML::Value << s.subject;
    out << YAML::Key << "title" << YAML::Value << s.title;
    out << YAML::Key << "learning_objective" << YAML::Value << std::string(to_string(s.learning_objective));
    out << YAML::Key << "narrative" << YAML::Value << YAML::Literal << s.narrative;
    out << YAML::Key << "dimensions" << YAML::Value << YAML::BeginSeq;
    for (Dimension d : s.applicable_dimensions) {
      auto it = s.dimension_descriptions.find(d);
      if (it == s.dimension_descriptions.end()) {
        out << std::string(to_string(d));
      } else {
        out << YAML::BeginMap << YAML::Key << "id" << YAML::Value << std::string(to_string(d))
            << YAML::Key << "description" << YAML::Value << it->second << YAML::EndMap;
      }
    }
    out << YAML::EndSeq;
    out << YAML::Key << "topic_terms" << YAML::Value << YAML::Flow << s.topic_terms;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace promptlit
