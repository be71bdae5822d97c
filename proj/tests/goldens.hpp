#pragma once
// Readers for the oracle-generated golden files in tests/fixtures. Kept free
// of library code so the expected values never pass through the code under test.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace golden {

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// "a/b" or an integer, as an exact ratio evaluated in long double.
inline long double ratio(const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) return std::stold(text);
  return std::stold(text.substr(0, slash)) / std::stold(text.substr(slash + 1));
}

struct ItemRow {
  int correct = 0;
  int answered = 0;
  int upper = 0;
  int lower = 0;
  int group = 0;
  bool in_range = false;

  long double difficulty() const { return static_cast<long double>(correct) / answered; }
  long double discrimination() const { return static_cast<long double>(upper - lower) / group; }
};

inline std::vector<std::pair<std::string, ItemRow>> items(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::pair<std::string, ItemRow>> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto c = split(line);
    out.push_back({c.at(0), {std::stoi(c[1]), std::stoi(c[2]), std::stoi(c[3]), std::stoi(c[4]), std::stoi(c[5]),
                             c[6] == "1"}});
  }
  return out;
}

/// numerator, denominator and complete-row count.
struct AlphaGolden {
  long double num = 0;
  long double den = 1;
  int rows = 0;
  long double value() const { return num / den; }
};

inline AlphaGolden alpha(const std::string& path) {
  std::ifstream in(path);
  AlphaGolden a;
  in >> a.num >> a.den >> a.rows;
  return a;
}

struct GraderRow {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  long double accuracy = 0;
  long double explanation = 0;
};

/// Dimension name -> row; the "overall" row only carries the explanation value.
inline std::map<std::string, GraderRow> grader(const std::string& path) {
  std::ifstream in(path);
  std::map<std::string, GraderRow> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    GraderRow r;
    if (c.at(0) != "overall") {
      r.tp = std::stoul(c[1]);
      r.fp = std::stoul(c[2]);
      r.fn = std::stoul(c[3]);
      r.tn = std::stoul(c[4]);
      r.accuracy = ratio(c[5]);
    }
    r.explanation = ratio(c.at(6));
    out[c[0]] = r;
  }
  return out;
}

}  // namespace golden
