#include <doctest.h>

#include <random>

#include "promptlit/common.hpp"
#include "promptlit/csv.hpp"

using namespace promptlit;

TEST_CASE("trim, lower and blank") {
  CHECK(text::trim("  a b \n") == "a b");
  CHECK(text::trim("   ").empty());
  CHECK(text::to_lower("AbC") == "abc");
  CHECK(text::is_blank(" \t\n"));
  CHECK_FALSE(text::is_blank(" x "));
}

TEST_CASE("tokenize keeps inner apostrophes") {
  CHECK(text::tokenize("I'm learning about Cells!") ==
        std::vector<std::string>{"i'm", "learning", "about", "cells"});
  CHECK(text::tokenize("'quoted' words") == std::vector<std::string>{"quoted", "words"});
  CHECK(text::tokenize("").empty());
}

TEST_CASE("word count and stemming") {
  CHECK(text::word_count("  one two\tthree\n") == 3);
  CHECK(text::word_count("") == 0);
  CHECK(text::stem("cells") == "cell");
  CHECK(text::stem("studies") == "study");
  CHECK(text::stem("learning") == "learn");
  CHECK(text::stem("explained") == "explain");
  CHECK(text::stem("boxes") == "box");
  CHECK(text::stem("class") == "class");
  CHECK(text::stem("virus") == "virus");
  CHECK(text::stem("is") == "is");
}

TEST_CASE("join") {
  CHECK(text::join({"a", "b", "c"}, ", ") == "a, b, c");
  CHECK(text::join({}, ",").empty());
}

TEST_CASE("csv quoting") {
  CHECK(csv::escape("plain") == "plain");
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv::escape("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("csv parse handles quoted newlines and trailing newline") {
  const auto rows = csv::parse("a,b\n\"x,1\",\"multi\nline\"\n,\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1] == csv::Row{"x,1", "multi\nline"});
  CHECK(rows[2] == csv::Row{"", ""});
}

TEST_CASE("csv round trip on random rows") {
  std::mt19937_64 rng(1);
  const std::string alphabet = "ab,\"\n x";
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<csv::Row> rows(1 + rng() % 5);
    const std::size_t width = 1 + rng() % 4;
    for (auto& r : rows) {
      r.resize(width);
      for (auto& f : r) {
        const std::size_t len = rng() % 6;
        for (std::size_t i = 0; i < len; ++i) f.push_back(alphabet[rng() % alphabet.size()]);
      }
      if (width == 1 && r[0].empty()) r[0] = "a";  // an empty single-field row is a blank line
    }
    std::string doc;
    for (const auto& r : rows) doc += csv::format_row(r);
    CHECK(csv::parse(doc) == rows);
  }
}
