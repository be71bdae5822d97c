#pragma once
// Reference computations used as test oracles. Each one is written from the
// textbook definition and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

/// Two-sided exact McNemar p: both binomial(n, 1/2) tails at min(b,c) and
/// max(b,c), summed from Pascal's triangle and capped at 1.
inline double mcnemar_p(std::uint64_t b, std::uint64_t c) {
  const std::uint64_t n = b + c;
  if (n == 0) return 1.0;
  std::vector<long double> row{1.0L};
  for (std::uint64_t i = 0; i < n; ++i) {
    std::vector<long double> next(row.size() + 1, 0.0L);
    for (std::size_t k = 0; k < row.size(); ++k) {
      next[k] += row[k] / 2;
      next[k + 1] += row[k] / 2;
    }
    row = std::move(next);
  }
  const std::uint64_t lo = std::min(b, c);
  const std::uint64_t hi = std::max(b, c);
  long double p = 0;
  for (std::uint64_t k = 0; k <= n; ++k) {
    if (k <= lo || k >= hi) p += row[k];
  }
  return static_cast<double>(std::min<long double>(1.0L, p));
}

/// Two-sided exact signed-rank p by listing every sign assignment of the
/// observed absolute differences (zeros dropped, tied ranks averaged).
inline double wilcoxon_p(const std::vector<double>& raw_diffs) {
  std::vector<double> d;
  for (double x : raw_diffs) {
    if (x != 0.0) d.push_back(x);
  }
  const std::size_t n = d.size();
  if (n == 0) return 1.0;
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0;
    double equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) ++less;
      if (std::abs(d[j]) == std::abs(d[i])) ++equal;
    }
    rank[i] = less + (equal + 1) / 2;
  }
  double observed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0) observed += rank[i];
  }
  std::uint64_t at_or_below = 0;
  std::uint64_t at_or_above = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) w += rank[i];
    }
    if (w <= observed + 1e-9) ++at_or_below;
    if (w >= observed - 1e-9) ++at_or_above;
  }
  const double total = std::ldexp(1.0, static_cast<int>(n));
  return std::min(1.0, 2.0 * static_cast<double>(std::min(at_or_below, at_or_above)) / total);
}

inline double mean(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Product-moment correlation from deviation sums.
inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0;
  double sxx = 0;
  double syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Alpha with sample (n - 1) variances; the convention cancels in the ratio.
inline double cronbach_alpha(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  const std::size_t k = rows.front().size();
  auto sample_var = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(n - 1);
  };
  double item_var = 0;
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> col;
    for (const auto& r : rows) col.push_back(r[j]);
    item_var += sample_var(col);
  }
  std::vector<double> totals;
  for (const auto& r : rows) {
    double t = 0;
    for (double x : r) t += x;
    totals.push_back(t);
  }
  const double kk = static_cast<double>(k);
  return kk / (kk - 1) * (1 - item_var / sample_var(totals));
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace oracle
