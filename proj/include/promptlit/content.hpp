#pragma once

#include <string_view>
#include <vector>

#include "promptlit/assessment.hpp"
#include "promptlit/domain.hpp"

namespace promptlit::content {

// Shipped bundles, compiled in from content/.
std::string_view scenario_bundle_text();
std::string_view item_bank_text();
std::string_view grading_template_text();
inline constexpr std::string_view kGradingTemplateVersion = "grading-v1";

/// Validated shipped scenarios; throws ContentError if the bundle is broken.
const std::vector<Scenario>& scenarios();
const ItemBank& item_bank();

const Scenario* find_scenario(const std::vector<Scenario>& scenarios, std::string_view id);

}  // namespace promptlit::content
