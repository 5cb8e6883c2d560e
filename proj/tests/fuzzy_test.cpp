#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fuzzy_scan.hpp"
#include "vulnmap/fuzzy.hpp"

using namespace vulnmap;
using namespace vulnmap::fuzzy;

TEST(GramProfile, Bigrams) {
  const auto p = gram_profile("ab", 2);
  EXPECT_EQ(p.grams, (std::map<std::string, std::uint32_t>{{"-a", 1}, {"ab", 1}, {"b-", 1}}));
  EXPECT_DOUBLE_EQ(p.magnitude, std::sqrt(3.0));
}

TEST(GramProfile, MultisetCounts) {
  const auto p = gram_profile("aaa", 2);
  EXPECT_EQ(p.grams, (std::map<std::string, std::uint32_t>{{"-a", 1}, {"aa", 2}, {"a-", 1}}));
  EXPECT_DOUBLE_EQ(p.magnitude, std::sqrt(6.0));
}

TEST(GramProfile, EmptyInputThrows) {
  EXPECT_THROW(gram_profile("", 2), Error);
  EXPECT_THROW(gram_profile("--", 2), Error);
  EXPECT_THROW(gram_profile("ab", 1), Error);
}

TEST(GramProfile, ShortStringIsSingleGram) {
  const auto p = gram_profile("a", 4);
  EXPECT_EQ(p.grams.size(), 1u);
  EXPECT_EQ(p.grams.begin()->first, "-a-");
}

TEST(Normalize, CollapsesSeparators) {
  EXPECT_EQ(normalize("@Babel/Core"), "babel-core");
  EXPECT_EQ(normalize("a__b..c"), "a-b-c");
  EXPECT_EQ(normalize("--"), "");
}

TEST(Levenshtein, Basics) {
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("abc", "abc"), 0u);
}

TEST(Similarity, Examples) {
  EXPECT_EQ(similarity("lodash", "lodash"), 1.0);
  EXPECT_EQ(similarity("a", "b"), 0.0);
  EXPECT_THROW(similarity("", "x"), Error);
}

// Golden values from tests/oracle/fuzzy_oracle.py.
TEST(Similarity, GoldenValuesFromReferenceOracle) {
  EXPECT_NEAR(similarity("create-react-app", "react"), 0.63245553203367588, 1e-12);
  EXPECT_NEAR(similarity("lodash", "lodash-es"), 0.81649658092772603, 1e-12);
  EXPECT_NEAR(similarity("react", "react-dom"), 0.7453559924999299, 1e-12);
  EXPECT_NEAR(similarity("express", "expressjs"), 0.77777777777777779, 1e-12);
  EXPECT_EQ(similarity("zzz", "lodash"), 0.0);
  EXPECT_EQ(similarity("ab", "ba"), 0.0);
}

TEST(Similarity, CaseAndPunctuationInsensitive) {
  EXPECT_EQ(similarity("Lodash", "lodash"), 1.0);
  EXPECT_EQ(similarity("foo_bar", "foo-bar"), 1.0);
}

TEST(BestMatch, ExactMatchDominates) {
  const std::vector<std::string> c{"lodash", "lodash-es"};
  EXPECT_EQ(best_match("lodash", c), (Match{"lodash", 1.0}));
}

TEST(BestMatch, BelowCutoffIsNone) {
  const std::vector<std::string> c{"lodash"};
  EXPECT_FALSE(best_match("zzz", c, 0.3).has_value());
}

TEST(BestMatch, EmptyCandidateSet) {
  EXPECT_FALSE(best_match("x", std::vector<std::string>{}).has_value());
}

TEST(BestMatch, TiesGoToShorterThenSmaller) {
  // Same normalized form so the scores are equal.
  const std::vector<std::string> c{"Foo_Bar", "foo-bar", "FOO.BAR"};
  EXPECT_EQ(best_match("foo bar", c)->candidate, "FOO.BAR");
  const std::vector<std::string> d{"foo--bar", "foo-bar"};
  EXPECT_EQ(best_match("foo bar", d)->candidate, "foo-bar");
}

TEST(BestMatch, SkipsCandidatesThatNormalizeToEmpty) {
  const std::vector<std::string> c{"--", "react"};
  EXPECT_EQ(best_match("react", c)->candidate, "react");
  EXPECT_FALSE(best_match("--", c).has_value());
}

namespace {

std::string random_word(std::mt19937_64& rng) {
  static const std::string alphabet = "abcdeor-_.1";
  std::string s;
  const auto len = 1 + rng() % 12;
  for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
  return s;
}

} // namespace

TEST(SimilarityProperties, SymmetricBoundedAndReflexive) {
  std::mt19937_64 rng(1234);
  int checked = 0;
  while (checked < 10000) {
    const auto a = random_word(rng);
    const auto b = random_word(rng);
    if (normalize(a).empty() || normalize(b).empty()) continue;
    const double ab = similarity(a, b);
    ASSERT_EQ(ab, similarity(b, a)) << a << " / " << b;
    ASSERT_GE(ab, 0.0);
    ASSERT_LE(ab, 1.0);
    ASSERT_EQ(similarity(a, a), 1.0);
    ++checked;
  }
}

TEST(BestMatchProperties, AgreesWithLinearScan) {
  std::mt19937_64 rng(55);
  for (int round = 0; round < 1000; ++round) {
    std::vector<std::string> candidates(rng() % 12);
    for (auto& c : candidates) c = vulnmap::testing::random_name(rng);
    const auto query = vulnmap::testing::random_name(rng);
    const double cutoff = (rng() % 10) / 10.0;
    ASSERT_EQ(best_match(query, candidates, cutoff), vulnmap::testing::linear_best(query, candidates, cutoff))
        << "round " << round;
  }
}
