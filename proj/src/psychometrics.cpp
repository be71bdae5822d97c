#include "promptlit/psychometrics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <numeric>
#include <set>

namespace promptlit::stats {

namespace {

constexpr double kBoundaryTolerance = 1e-9;

double population_variance(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / n;
}

// Two-sided normal tail probability for |z|.
double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

}  // namespace

std::string_view to_string(Method m) { return m == Method::Exact ? "exact" : "approximate"; }

double difficulty_index(std::span<const Cell> column) {
  std::size_t answered = 0;
  std::size_t correct = 0;
  for (Cell c : column) {
    if (c == Cell::Missing) continue;
    ++answered;
    if (c == Cell::Right) ++correct;
  }
  if (answered == 0) throw StatsError(StatsError::Kind::EmptyColumn, "item has no answered cells");
  return static_cast<double>(correct) / static_cast<double>(answered);
}

std::size_t extreme_group_size(std::size_t n) {
  // Integer ceil(0.27 n); the floating product overshoots for some n.
  return (27 * n + 99) / 100;
}

double discrimination_index(const ResponseMatrix& matrix, std::size_t item_col) {
  const std::size_t n = matrix.rows();
  if (n < 4) {
    throw StatsError(StatsError::Kind::TooFewStudents,
                     "discrimination needs at least 4 students, got " + std::to_string(n));
  }
  if (item_col >= matrix.cols()) throw PreconditionError("item column out of range");
  const auto totals = matrix.totals();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return totals[a] > totals[b]; });
  const std::size_t g = extreme_group_size(n);
  int upper = 0;
  int lower = 0;
  for (std::size_t i = 0; i < g; ++i) {
    upper += matrix.at(order[i], item_col) == Cell::Right ? 1 : 0;
    lower += matrix.at(order[n - g + i], item_col) == Cell::Right ? 1 : 0;
  }
  return static_cast<double>(upper - lower) / static_cast<double>(g);
}

bool in_desired_range(double difficulty, double discrimination) {
  return difficulty >= kDifficultyLow - kBoundaryTolerance &&
         difficulty <= kDifficultyHigh + kBoundaryTolerance &&
         discrimination >= kMinDiscrimination - kBoundaryTolerance;
}

ItemClassification classify_items(const ResponseMatrix& matrix, const ItemBank& bank) {
  ItemClassification out;
  std::map<ItemKind, std::size_t> in_range;
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    ItemStats s;
    s.item_id = matrix.items()[c];
    s.kind = bank.item(s.item_id).kind;
    const auto column = matrix.column(c);
    s.difficulty = difficulty_index(column);
    s.discrimination = discrimination_index(matrix, c);
    s.in_desired_range = in_desired_range(s.difficulty, s.discrimination);
    out.count_by_kind[s.kind] += 1;
    in_range[s.kind] += s.in_desired_range ? 1 : 0;
    out.items.push_back(std::move(s));
  }
  for (const auto& [kind, count] : out.count_by_kind) {
    out.fraction_in_range[kind] = static_cast<double>(in_range[kind]) / static_cast<double>(count);
  }
  return out;
}

double cronbach_alpha(std::span<const double> scores, std::size_t rows, std::size_t cols) {
  if (scores.size() != rows * cols) throw PreconditionError("score table is not rows x cols");
  if (cols < 2 || rows < 2) {
    throw StatsError(StatsError::Kind::InsufficientData, "alpha needs at least 2 items and 2 students");
  }
  double item_var_sum = 0;
  std::vector<double> column(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) column[r] = scores[r * cols + c];
    item_var_sum += population_variance(column);
  }
  std::vector<double> totals(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) totals[r] += scores[r * cols + c];
  }
  const double total_var = population_variance(totals);
  if (total_var <= 0) {
    throw StatsError(StatsError::Kind::ZeroTotalVariance, "total scores have zero variance");
  }
  const double k = static_cast<double>(cols);
  return k / (k - 1) * (1 - item_var_sum / total_var);
}

double cronbach_alpha(const ResponseMatrix& matrix) {
  if (matrix.has_missing()) {
    throw StatsError(StatsError::Kind::MissingData, "alpha requires a matrix without missing cells");
  }
  std::vector<double> scores;
  scores.reserve(matrix.rows() * matrix.cols());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
      scores.push_back(matrix.at(r, c) == Cell::Right ? 1.0 : 0.0);
    }
  }
  return cronbach_alpha(scores, matrix.rows(), matrix.cols());
}

namespace detail {
double kappa_from_table(const std::vector<std::vector<double>>& table, std::size_t n) {
  const double total = static_cast<double>(n);
  double observed = 0;
  double expected = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    observed += table[i][i];
    double row = 0;
    double col = 0;
    for (std::size_t j = 0; j < table.size(); ++j) {
      row += table[i][j];
      col += table[j][i];
    }
    expected += row * col;
  }
  const double p_o = observed / total;
  const double p_e = expected / (total * total);
  if (p_e >= 1.0) {
    if (p_o >= 1.0) return 1.0;
    throw StatsError(StatsError::Kind::DegenerateMarginals, "chance agreement is 1 but observed is not");
  }
  return (p_o - p_e) / (1.0 - p_e);
}
}  // namespace detail

TestResult mcnemar_test(std::uint64_t b, std::uint64_t c) {
  const std::uint64_t n = b + c;
  TestResult r;
  r.n = n;
  if (n == 0) {
    r.method = Method::Exact;
    r.statistic = 0;
    r.p_value = 1.0;
    return r;
  }
  if (n <= kMcNemarExactCutoff) {
    const std::uint64_t k = std::min(b, c);
    std::uint64_t tail = 0;
    std::uint64_t binom = 1;  // C(n, i)
    for (std::uint64_t i = 0; i <= k; ++i) {
      tail += binom;
      binom = binom * (n - i) / (i + 1);
    }
    r.method = Method::Exact;
    r.statistic = static_cast<double>(k);
    r.p_value = std::min(1.0, 2.0 * std::ldexp(static_cast<double>(tail), -static_cast<int>(n)));
    return r;
  }
  const double diff = std::max(0.0, std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0);
  const double chi2 = diff * diff / static_cast<double>(n);
  r.method = Method::Approximate;
  r.statistic = chi2;
  r.p_value = std::min(1.0, std::erfc(std::sqrt(chi2 / 2.0)));
  return r;
}

TestResult wilcoxon_signed_rank(std::span<const double> pre, std::span<const double> post) {
  if (pre.size() != post.size()) {
    throw StatsError(StatsError::Kind::LengthMismatch, "paired vectors differ in length");
  }
  if (pre.empty()) throw StatsError(StatsError::Kind::InsufficientData, "Wilcoxon needs at least one pair");

  std::vector<double> diffs;
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const double d = post[i] - pre[i];
    if (d != 0.0) diffs.push_back(d);
  }
  const std::size_t n = diffs.size();
  TestResult r;
  r.n = n;
  if (n == 0) {
    r.method = Method::Exact;
    r.p_value = 1.0;
    return r;
  }

  // Doubled average ranks keep tied ranks integral.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });
  std::vector<std::uint64_t> rank2(n);
  double tie_term = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = (i + 1) + (j + 1);
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  std::uint64_t w_plus2 = 0;
  std::uint64_t total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (diffs[i] > 0) w_plus2 += rank2[i];
  }
  const double w_plus = static_cast<double>(w_plus2) / 2.0;
  const double w_minus = static_cast<double>(total2 - w_plus2) / 2.0;
  r.statistic = std::min(w_plus, w_minus);

  if (n <= kWilcoxonExactCutoff) {
    // Distribution of doubled W+ over all 2^n sign assignments.
    std::vector<double> count(total2 + 1, 0.0);
    count[0] = 1;
    std::uint64_t reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
      reach += rank2[i];
      for (std::uint64_t s = reach; s >= rank2[i]; --s) {
        count[s] += count[s - rank2[i]];
        if (s == rank2[i]) break;
      }
    }
    double lower = 0;
    double upper = 0;
    for (std::uint64_t s = 0; s <= total2; ++s) {
      if (s <= w_plus2) lower += count[s];
      if (s >= w_plus2) upper += count[s];
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    r.method = Method::Exact;
    r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
    return r;
  }

  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1) / 4.0;
  const double var = nn * (nn + 1) * (2 * nn + 1) / 24.0 - tie_term / 48.0;
  r.method = Method::Approximate;
  r.p_value = var > 0 ? std::min(1.0, normal_two_sided((w_plus - mean) / std::sqrt(var))) : 1.0;
  return r;
}

Correlation pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatsError(StatsError::Kind::LengthMismatch, "x and y differ in length");
  if (x.size() < 3) {
    throw StatsError(StatsError::Kind::InsufficientData, "Pearson correlation needs at least 3 pairs");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0;
  double sxx = 0;
  double syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw StatsError(StatsError::Kind::ConstantVector, "constant input vector");
  Correlation c;
  c.n = x.size();
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = n - 2;
  if (std::abs(c.r) >= 1.0) {
    c.p_value = 0.0;
  } else {
    const double t = c.r * std::sqrt(df / (1 - c.r * c.r));
    const boost::math::students_t dist(df);
    c.p_value = std::min(1.0, 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  }
  return c;
}

double PassFailAccuracy::accuracy(Dimension d) const {
  auto it = per_dimension.find(d);
  return it == per_dimension.end() ? 0.0 : it->second.accuracy();
}

double PassFailAccuracy::mean_accuracy() const {
  if (per_dimension.empty()) return 0.0;
  double sum = 0;
  for (const auto& [_, counts] : per_dimension) sum += counts.accuracy();
  return sum / static_cast<double>(per_dimension.size());
}

PassFailAccuracy grader_pass_fail_accuracy(const std::vector<GradeReport>& predicted,
                                           const std::vector<GradeReport>& human) {
  using Key = std::pair<std::string, Dimension>;
  auto index = [](const std::vector<GradeReport>& reports) {
    std::map<Key, bool> out;
    for (const auto& r : reports) {
      for (const auto& [d, v] : r.verdicts) out[{r.attempt.key(), d}] = v.pass;
    }
    return out;
  };
  const auto pred = index(predicted);
  const auto truth = index(human);
  std::vector<std::string> missing;
  auto describe = [](const Key& k) { return k.first + ":" + std::string(to_string(k.second)); };
  for (const auto& [k, _] : truth) {
    if (!pred.contains(k)) missing.push_back("no prediction for " + describe(k));
  }
  for (const auto& [k, _] : pred) {
    if (!truth.contains(k)) missing.push_back("no human label for " + describe(k));
  }
  if (!missing.empty()) {
    std::string msg = "predicted and human labels cover different pairs (" + std::to_string(missing.size()) + ")";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) msg += "; " + missing[i];
    throw StatsError(StatsError::Kind::CoverageMismatch, msg);
  }
  PassFailAccuracy out;
  for (const auto& [k, human_pass] : truth) {
    auto& counts = out.per_dimension[k.second];
    const bool pred_pass = pred.at(k);
    if (pred_pass && human_pass) ++counts.true_pass;
    else if (pred_pass) ++counts.false_pass;
    else if (human_pass) ++counts.false_fail;
    else ++counts.true_fail;
  }
  return out;
}

ExplanationAccuracy explanation_accuracy(const std::map<Dimension, std::vector<double>>& ratings) {
  ExplanationAccuracy out;
  double pooled = 0;
  std::size_t pooled_n = 0;
  for (const auto& [d, values] : ratings) {
    if (values.empty()) continue;
    double sum = 0;
    for (double v : values) {
      if (v != 0.0 && v != 0.5 && v != 1.0) {
        throw StatsError(StatsError::Kind::InvalidRating,
                         "explanation rating " + std::to_string(v) + " for " + std::string(to_string(d)) +
                             " is not on the 1 / 0.5 / 0 scale");
      }
      sum += v;
    }
    out.per_dimension[d] = sum / static_cast<double>(values.size());
    out.counts[d] = values.size();
    pooled += sum;
    pooled_n += values.size();
  }
  if (pooled_n == 0) throw StatsError(StatsError::Kind::InsufficientData, "no explanation ratings");
  out.overall = pooled / static_cast<double>(pooled_n);
  return out;
}

}  // namespace promptlit::stats
