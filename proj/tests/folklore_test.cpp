#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "climattn/folklore.hpp"
#include "climattn/random.hpp"

namespace climattn {
namespace {

TermDictionary dict_of(std::vector<std::string> terms) { return TermDictionary(terms); }

TEST(Tokenize, LowercasesAndSplitsOnPunctuationRuns) {
  EXPECT_EQ(tokenize("The Great FLOOD, covered--the earth!"),
            (std::vector<std::string>{"the", "great", "flood", "covered", "the", "earth"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("  ...  ").empty());
  EXPECT_EQ(tokenize("natural\xE2\x80\x94" "disaster"),
            (std::vector<std::string>{"natural", "disaster"}));
  EXPECT_EQ(tokenize("caf\xC3\xA9 na\xC3\xAFve"),
            (std::vector<std::string>{"caf\xC3\xA9", "na\xC3\xAFve"}));
  EXPECT_EQ(tokenize("year1600 x2"), (std::vector<std::string>{"year1600", "x2"}));
}

TEST(ClassifyMotif, Examples) {
  EXPECT_TRUE(classify_motif("The great flood covered the earth", dict_of({"flood"})));
  EXPECT_FALSE(classify_motif("", dict_of({"flood"})));
  EXPECT_TRUE(classify_motif("after the natural\xE2\x80\x94" "disaster struck",
                             dict_of({"natural disaster"})));
  EXPECT_FALSE(classify_motif("natural causes of a disaster", dict_of({"natural disaster"})));
  EXPECT_FALSE(classify_motif("floodgates opened", dict_of({"flood"})));
}

TEST(ClassifyMotif, CaseAndPunctuationInvariance) {
  auto dict = dict_of({"weather", "natural disaster", "climate"});
  const std::vector<std::string> texts{
      "A storm-god changes the Weather.", "Natural, disaster! follows",
      "no match here; none at all", "CLIMATE/temperature shift", "natural; ; disaster"};
  for (const auto& t : texts) {
    std::string upper = t, lower = t, spaced = t;
    std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    for (auto& c : spaced)
      if (std::ispunct(static_cast<unsigned char>(c))) c = ' ';
    const bool base = classify_motif(t, dict);
    EXPECT_EQ(base, classify_motif(upper, dict)) << t;
    EXPECT_EQ(base, classify_motif(lower, dict)) << t;
    EXPECT_EQ(base, classify_motif(spaced, dict)) << t;
  }
}

TEST(TermDictionary, NormalizesAndRejectsDuplicates) {
  auto d = dict_of({"Natural   Disaster", "weather"});
  EXPECT_EQ(d.terms(), (std::vector<std::string>{"natural disaster", "weather"}));
  EXPECT_THROW(dict_of({"flood", "Flood"}), InputError);
  EXPECT_THROW(dict_of({}), InputError);
  EXPECT_THROW(dict_of({"  ", "--"}), InputError);
}

TEST(TermDictionary, ParsesOneTermPerLine) {
  auto d = TermDictionary::parse("# seed list\nweather\r\n\nnatural disaster\n  # indented comment\nclimate");
  EXPECT_EQ(d.terms(), (std::vector<std::string>{"climate", "natural disaster", "weather"}));
}

TEST(ScoreGroup, Examples) {
  std::vector<bool> flags(62, false);
  EXPECT_EQ(score_group(flags).score, 0.0);
  std::fill(flags.begin(), flags.begin() + 31, true);
  auto half = score_group(flags);
  EXPECT_EQ(half.env_motifs, 31);
  EXPECT_EQ(half.total_motifs, 62);
  EXPECT_NEAR(half.score, 0.405465108108164, 1e-15);
  std::fill(flags.begin(), flags.end(), true);
  EXPECT_NEAR(score_group(flags).score, 0.693147180559945, 1e-15);
  EXPECT_THROW(score_group(std::vector<bool>{}), InputError);
}

TEST(ScoreCounts, AccurateForTinyShares) {
  const auto s = score_counts(1, 1000000000000LL);
  EXPECT_NEAR(s.score / 1e-12, 1.0, 1e-9);
  EXPECT_THROW(score_counts(3, 2), InputError);
  EXPECT_THROW(score_counts(-1, 2), InputError);
}

TEST(MotifCatalog, RejectsDuplicateKeys) {
  EXPECT_THROW(MotifCatalog({{"g1", "m1", "a"}, {"g1", "m1", "b"}}), InputError);
  EXPECT_NO_THROW(MotifCatalog({{"g1", "m1", "a"}, {"g2", "m1", "b"}}));
}

TEST(ScoreCatalog, OneMatchingMotifScoresLn2) {
  MotifCatalog c({{"g1", "m1", "The great flood"}});
  auto scores = score_catalog(c, dict_of({"flood"}));
  ASSERT_EQ(scores.size(), 1u);
  EXPECT_EQ(scores[0].group_id, "g1");
  EXPECT_DOUBLE_EQ(scores[0].score, std::log(2.0));
}

TEST(ScoreCatalog, SortedAndMissingGroupsListed) {
  MotifCatalog c({{"zeta", "m1", "rain falls"}, {"alpha", "m1", ""}, {"alpha", "m2", "rain"}});
  auto dict = dict_of({"rain"});
  auto scores = score_catalog(c, dict);
  ASSERT_EQ(scores.size(), 2u);
  EXPECT_EQ(scores[0].group_id, "alpha");
  EXPECT_EQ(scores[0].env_motifs, 1);
  EXPECT_EQ(scores[0].total_motifs, 2);
  const std::vector<std::string> expected{"alpha", "beta", "gamma", "zeta"};
  try {
    score_catalog(c, dict, expected);
    FAIL() << "expected missing-group error";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("beta, gamma"), std::string::npos) << e.what();
  }
}

std::vector<MotifEntry> random_catalog(std::uint64_t seed, int groups, int motifs) {
  const std::vector<std::string> words{"rain", "storm", "hero", "weather", "fox", "river",
                                       "climate", "moon", "natural", "disaster", "drought"};
  Engine engine(seed);
  std::vector<MotifEntry> out;
  for (int g = 0; g < groups; ++g) {
    for (int m = 0; m < motifs; ++m) {
      std::string text;
      const int len = 1 + static_cast<int>(uniform01(engine) * 6);
      for (int w = 0; w < len; ++w) {
        text += words[static_cast<std::size_t>(uniform01(engine) * double(words.size()))];
        text += uniform01(engine) < 0.3 ? ", " : " ";
      }
      out.push_back({"g" + std::to_string(g), "m" + std::to_string(m), text});
    }
  }
  return out;
}

TEST(ScoreCatalog, DuplicationAndOrderInvariance) {
  auto entries = random_catalog(5, 12, 40);
  auto dict = dict_of({"weather", "natural disaster", "drought"});
  auto base = score_catalog(MotifCatalog(entries), dict);

  auto doubled = entries;
  for (const auto& e : entries) doubled.push_back({e.group_id, e.motif_id + "_copy", e.description});
  auto twice = score_catalog(MotifCatalog(doubled), dict);

  auto shuffled = entries;
  std::reverse(shuffled.begin(), shuffled.end());
  std::rotate(shuffled.begin(), shuffled.begin() + 77, shuffled.end());
  auto reordered = score_catalog(MotifCatalog(shuffled), dict);

  ASSERT_EQ(base.size(), twice.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    EXPECT_EQ(base[i].score, twice[i].score);
    EXPECT_EQ(2 * base[i].env_motifs, twice[i].env_motifs);
    EXPECT_EQ(base[i].group_id, reordered[i].group_id);
    EXPECT_EQ(base[i].env_motifs, reordered[i].env_motifs);
    EXPECT_GE(base[i].score, 0.0);
    EXPECT_LE(base[i].score, std::log(2.0));
  }
}

TEST(ScoreCatalog, LargerDictionaryNeverLowersCounts) {
  auto catalog = MotifCatalog(random_catalog(9, 10, 60));
  const std::vector<std::string> all{"weather", "storm", "natural disaster", "river", "moon rain",
                                     "climate", "drought"};
  std::vector<std::string> terms;
  std::vector<FolkloreScore> previous;
  for (const auto& t : all) {
    terms.push_back(t);
    auto now = score_catalog(catalog, TermDictionary(terms));
    for (std::size_t i = 0; i < previous.size(); ++i) {
      EXPECT_GE(now[i].env_motifs, previous[i].env_motifs);
    }
    previous = now;
  }
}

TEST(ScoreCatalog, CountsMatchMotifwiseClassification) {
  auto entries = random_catalog(13, 6, 50);
  auto dict = dict_of({"storm", "fox river"});
  auto scores = score_catalog(MotifCatalog(entries), dict);
  for (const auto& s : scores) {
    long long env = 0, total = 0;
    for (const auto& e : entries) {
      if (e.group_id != s.group_id) continue;
      ++total;
      env += classify_motif(e.description, dict) ? 1 : 0;
    }
    EXPECT_EQ(s.env_motifs, env);
    EXPECT_EQ(s.total_motifs, total);
  }
}

}  // namespace
}  // namespace climattn
