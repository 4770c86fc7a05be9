#include <gtest/gtest.h>

#include "costorm/text.hpp"

using namespace costorm::text;

TEST(Text, TrimAndLower) {
  EXPECT_EQ(trim("  a b \n"), "a b");
  EXPECT_EQ(trim(""), "");
  EXPECT_EQ(to_lower("AbC"), "abc");
}

TEST(Text, SplitLinesKeepsEmptyAndStripsCr) {
  auto l = split_lines("a\r\n\nb");
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0], "a");
  EXPECT_EQ(l[1], "");
  EXPECT_EQ(l[2], "b");
}

TEST(Text, LastWordsKeepsTail) {
  EXPECT_EQ(last_words("one two  three\nfour", 2), "three four");
  EXPECT_EQ(last_words("one", 5), "one");
  EXPECT_EQ(word_count(" a b  c "), 3u);
}

TEST(Text, Slugify) {
  EXPECT_EQ(slugify("AlphaFold 3: What's new?"), "alphafold-3-what-s-new");
  EXPECT_EQ(slugify("--"), "");
}

TEST(Text, FnvIsStable) {
  EXPECT_EQ(fnv1a64(""), 14695981039346656037ULL);
  EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
}

TEST(Text, CitationIndices) {
  EXPECT_EQ(citation_indices("a [1] b [12][3] [x] [0] [ 2]"), (std::vector<int>{1, 12, 3}));
}

TEST(Text, RewriteCitationsMapsAndDeletes) {
  auto out = rewrite_citations("A [1] and B [2][3].", [](int k) -> std::optional<int> {
    if (k == 2) return std::nullopt;
    return k * 10;
  });
  EXPECT_EQ(out, "A [10] and B [30].");
}

TEST(Text, DeletingMarkerTidiesSpacing) {
  EXPECT_EQ(strip_citations("Claim [1]."), "Claim.");
  EXPECT_EQ(strip_citations("Claim [1] continues."), "Claim continues.");
  EXPECT_EQ(strip_citations("Claim [1][2], then more"), "Claim, then more");
  EXPECT_EQ(strip_citations("[1] Leading"), "Leading");
}
