#include "promptlit/content.hpp"

namespace promptlit::content {

namespace data {
extern const std::string_view kScenarioBundle;
extern const std::string_view kItemBank;
extern const std::string_view kGradingTemplate;
}  // namespace data

std::string_view scenario_bundle_text() { return data::kScenarioBundle; }
std::string_view item_bank_text() { return data::kItemBank; }
std::string_view grading_template_text() { return data::kGradingTemplate; }

const std::vector<Scenario>& scenarios() {
  static const std::vector<Scenario> shipped = [] {
    auto result = validate_scenario_config(scenario_bundle_text());
    if (!result.ok()) throw ContentError(std::move(result.errors));
    return std::move(result.value);
  }();
  return shipped;
}

const ItemBank& item_bank() {
  static const ItemBank shipped = [] {
    auto result = validate_item_bank(item_bank_text());
    if (!result.ok()) throw ContentError(std::move(result.errors));
    return std::move(result.value);
  }();
  return shipped;
}

const Scenario* find_scenario(const std::vector<Scenario>& scenarios, std::string_view id) {
  for (const auto& s : scenarios) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

}  // namespace promptlit::content
