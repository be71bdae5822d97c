#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promptlit/assessment.hpp"
#include "promptlit/domain.hpp"

namespace promptlit::stats {

class StatsError : public Error {
 public:
  enum class Kind {
    EmptyColumn,
    TooFewStudents,
    InsufficientData,
    MissingData,
    ZeroTotalVariance,
    LengthMismatch,
    DegenerateMarginals,
    ConstantVector,
    InvalidRating,
    CoverageMismatch,
  };
  StatsError(Kind kind, std::string message) : Error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class Method : std::uint8_t { Exact, Approximate };
std::string_view to_string(Method m);

struct TestResult {
  double statistic = 0;
  double p_value = 1;
  std::size_t n = 0;
  Method method = Method::Exact;
};

// Item analysis --------------------------------------------------------------

/// Desired-range thresholds; both bounds closed.
inline constexpr double kDifficultyLow = 0.3;
inline constexpr double kDifficultyHigh = 0.7;
inline constexpr double kMinDiscrimination = 0.2;
/// Fraction of students in each extreme group.
inline constexpr double kExtremeGroupFraction = 0.27;

/// Proportion correct among non-missing cells.
double difficulty_index(std::span<const Cell> column);

/// Size of the upper and lower groups for `n` students: ceil(0.27 n).
std::size_t extreme_group_size(std::size_t n);

/// Upper-minus-lower 27% contrast. Students are ranked by total score
/// (descending, ties kept in row order); missing cells count as incorrect.
double discrimination_index(const ResponseMatrix& matrix, std::size_t item_col);

bool in_desired_range(double difficulty, double discrimination);

struct ItemStats {
  std::string item_id;
  ItemKind kind = ItemKind::TF;
  double difficulty = 0;
  double discrimination = 0;
  bool in_desired_range = false;
};

struct ItemClassification {
  std::vector<ItemStats> items;
  /// Fraction of items of each kind that fall in the desired range.
  std::map<ItemKind, double> fraction_in_range;
  std::map<ItemKind, std::size_t> count_by_kind;
};

ItemClassification classify_items(const ResponseMatrix& matrix, const ItemBank& bank);

// Reliability and agreement ---------------------------------------------------

/// Cronbach's alpha over a complete matrix, population variances throughout.
double cronbach_alpha(const ResponseMatrix& matrix);
/// Same, over row-major numeric scores (rows = students).
double cronbach_alpha(std::span<const double> scores, std::size_t rows, std::size_t cols);

namespace detail {
double kappa_from_table(const std::vector<std::vector<double>>& table, std::size_t n);
}

/// Cohen's kappa for two raters over the same subjects.
template <class T>
double cohen_kappa(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw StatsError(StatsError::Kind::LengthMismatch, "rater vectors differ in length");
  }
  if (a.empty()) throw StatsError(StatsError::Kind::InsufficientData, "kappa needs at least one rating");
  std::vector<T> categories(a.begin(), a.end());
  categories.insert(categories.end(), b.begin(), b.end());
  std::sort(categories.begin(), categories.end());
  categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
  auto index = [&](const T& v) {
    return static_cast<std::size_t>(std::lower_bound(categories.begin(), categories.end(), v) -
                                    categories.begin());
  };
  std::vector<std::vector<double>> table(categories.size(), std::vector<double>(categories.size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) table[index(a[i])][index(b[i])] += 1;
  return detail::kappa_from_table(table, a.size());
}

template <class T>
double cohen_kappa(const std::vector<T>& a, const std::vector<T>& b) {
  return cohen_kappa(std::span<const T>(a), std::span<const T>(b));
}

// Paired tests ----------------------------------------------------------------

/// Discordant-pair total at or below which McNemar uses the exact binomial form.
inline constexpr std::uint64_t kMcNemarExactCutoff = 25;
/// Non-zero pair count at or below which Wilcoxon enumerates exactly.
inline constexpr std::size_t kWilcoxonExactCutoff = 20;

/// McNemar test on discordant counts b (first only) and c (second only).
TestResult mcnemar_test(std::uint64_t b, std::uint64_t c);

/// Two-sided Wilcoxon signed-rank test on post - pre. The statistic is
/// min(W+, W-).
TestResult wilcoxon_signed_rank(std::span<const double> pre, std::span<const double> post);

struct Correlation {
  double r = 0;
  double p_value = 1;
  std::size_t n = 0;
};

/// Pearson product-moment correlation with a two-sided t-test p-value.
Correlation pearson_correlation(std::span<const double> x, std::span<const double> y);

// Grader evaluation -----------------------------------------------------------

struct ConfusionCounts {
  std::size_t true_pass = 0;   // predicted pass, human pass
  std::size_t false_pass = 0;  // predicted pass, human fail
  std::size_t false_fail = 0;  // predicted fail, human pass
  std::size_t true_fail = 0;   // predicted fail, human fail

  std::size_t total() const { return true_pass + false_pass + false_fail + true_fail; }
  std::size_t agreements() const { return true_pass + true_fail; }
  double accuracy() const { return total() == 0 ? 0.0 : static_cast<double>(agreements()) / total(); }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct PassFailAccuracy {
  std::map<Dimension, ConfusionCounts> per_dimension;
  double accuracy(Dimension d) const;
  /// Mean of the per-dimension accuracies over dimensions present.
  double mean_accuracy() const;
};

/// Agreement between predicted and human verdicts over identical
/// (attempt, dimension) coverage.
PassFailAccuracy grader_pass_fail_accuracy(const std::vector<GradeReport>& predicted,
                                           const std::vector<GradeReport>& human);

struct ExplanationAccuracy {
  std::map<Dimension, double> per_dimension;
  std::map<Dimension, std::size_t> counts;
  /// Mean over all rated pairs pooled across dimensions.
  double overall = 0;
};

/// Ratings on the 1 / 0.5 / 0 scale.
ExplanationAccuracy explanation_accuracy(const std::map<Dimension, std::vector<double>>& ratings);

}  // namespace promptlit::stats
