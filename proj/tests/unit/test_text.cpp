#include <gtest/gtest.h>

#include "dialdiv/text.hpp"

using namespace dialdiv::text;

TEST(Text, WordCountSplitsOnAnyWhitespace) {
  EXPECT_EQ(word_count(""), 0u);
  EXPECT_EQ(word_count("  one\ttwo\nthree  "), 3u);
  EXPECT_EQ(split_ws(" a  b ").size(), 2u);
}

TEST(Text, MetricTokensLowercaseAndStripEdgePunctuation) {
  auto t = metric_tokens("Hello, there! \"Friend\" -- don't");
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[0], "hello");
  EXPECT_EQ(t[1], "there");
  EXPECT_EQ(t[2], "friend");
  EXPECT_EQ(t[3], "don't");
}

TEST(Text, NormalizeCollapsesWhitespace) {
  EXPECT_EQ(normalize("  Hi   THERE\n you "), "hi there you");
}

TEST(Text, ReplaceWholeWordSkipsSubstrings) {
  EXPECT_EQ(replace_whole_word("Ann met Anna and Ann.", "Ann", "Bo"), "Bo met Anna and Bo.");
  EXPECT_EQ(replace_whole_word("Ann_x Ann", "Ann", "Bo"), "Ann_x Bo");
  EXPECT_EQ(replace_whole_word("abc", "", "x"), "abc");
}

TEST(Text, SubstituteLeavesUnknownBracesAlone) {
  EXPECT_EQ(substitute("{a} and {b} {", {{"a", "X"}}), "X and {b} {");
  EXPECT_EQ(substitute("{\n\"{a}\": 1\n}", {{"a", "Y"}}), "{\n\"Y\": 1\n}");
}

TEST(Text, JoinWithSeparator) {
  EXPECT_EQ(join({"a", "b", "c"}, ", "), "a, b, c");
  EXPECT_EQ(join({}, ","), "");
}
