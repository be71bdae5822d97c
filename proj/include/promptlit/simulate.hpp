#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "promptlit/assessment.hpp"
#include "promptlit/store.hpp"

namespace promptlit {

struct SimulationOptions {
  std::size_t students = 50;
  std::uint64_t seed = 7;
  /// Also produce simulated human labels (grades, ratings, OE scores).
  bool labels = true;
  /// Per-mille chance that a simulated human disagrees with the mock grader.
  int label_flip_permille = 80;
  std::string test_form = "v2";
};

struct SimulationResult {
  std::size_t sessions = 0;
  std::size_t attempts = 0;
  std::string responses_csv;
  std::string attempts_csv;
  std::string grades_csv;
  std::string labels_csv;
};

/// Drives a synthetic cohort through the whole session flow with the mock
/// chatbot and mock grader. Same options and an empty store give
/// byte-identical exports.
SimulationResult simulate_cohort(Store& store, const std::vector<Scenario>& scenarios, const ItemBank& bank,
                                 const SimulationOptions& options);

/// Writes responses.csv, attempts.csv, grades.csv and labels.csv.
void write_simulation(const SimulationResult& result, const std::filesystem::path& dir);

}  // namespace promptlit
