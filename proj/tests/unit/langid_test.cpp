// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "forge/error.hpp"
#include "forge/langid.hpp"
#include "forge/utf8.hpp"
#include "testkit.hpp"

namespace forge {
namespace {

std::string repeat(const std::string& unit, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? " " : "") + unit;
  return s;
}

// Two-label toy model whose tables can be derived by hand.
CharNgramModel toy_model(double smoothing = 1e-3) {
  return train_langid({{repeat("ab", 600), "x"}, {repeat("cd", 600), "y"}}, smoothing);
}

std::uint64_t key_of(const std::u32string& gram) { return char_ngrams(gram, static_cast<int>(gram.size())).at(0); }

TEST(Langid, UnigramTablesMatchHandCount) {
  const double s = 1e-3;
  const auto m = toy_model(s);
  ASSERT_EQ(m.labels, (std::vector<std::string>{"x", "y"}));
  // label x: a and b each 600 of 1200 unigrams; union vocab {a,b,c,d} plus unseen slot
  const double denom = 1.0 + s * 5.0;
  const auto& uni = m.per_label[0].orders[0];
  EXPECT_EQ(uni.vocabulary_size, 5u);
  EXPECT_NEAR(uni.log_prob.at(key_of(U"a")), std::log((0.5 + s) / denom), 1e-12);
  EXPECT_NEAR(uni.log_unseen, std::log(s / denom), 1e-12);
  EXPECT_FALSE(uni.log_prob.contains(key_of(U"c")));
  // bigrams in " ab ab ... ab ": " a" 600, "ab" 600, "b " 600
  const auto& bi = m.per_label[0].orders[1];
  EXPECT_NEAR(bi.log_prob.at(key_of(U"ab")), std::log((1.0 / 3.0 + s) / (1.0 + s * bi.vocabulary_size)), 1e-12);
}

TEST(Langid, SmoothedTablesAreDistributions) {
  const auto& m = testkit::langid_model();
  for (std::size_t l = 0; l < m.labels.size(); ++l)
    for (std::size_t o = 0; o < m.ngram_orders.size(); ++o) EXPECT_NEAR(m.probability_mass(l, o), 1.0, 1e-9);
}

TEST(Langid, PosteriorsSumToOne) {
  const auto& m = testkit::langid_model();
  testkit::Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto text = testkit::random_mixed_string(rng, 50);
    if (utf8::is_blank(*utf8::decode(text))) continue;
    LangDecision d;
    try {
      d = classify(text, m);
    } catch (const UnclassifiableError&) {
      continue;
    }
    double sum = 0;
    for (const auto& [l, p] : d.posteriors) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(d.confidence, d.posterior(d.label));
  }
}

TEST(Langid, SeparatesGeneratedLanguages) {
  const auto& m = testkit::langid_model();
  testkit::Rng rng(77);
  const auto fa = testkit::persian_lexicon();
  const auto en = testkit::english_lexicon();
  int fa_ok = 0, en_ok = 0;
  for (int i = 0; i < 100; ++i) {
    auto a = classify(testkit::persian_text(rng, fa, 40), m);
    auto b = classify(testkit::english_text(rng, en, 40), m);
    fa_ok += a.label == "fa" && a.confidence >= 0.8;
    en_ok += b.label == "en" && b.confidence >= 0.8;
  }
  EXPECT_EQ(fa_ok, 100);
  EXPECT_EQ(en_ok, 100);
}

TEST(Langid, MixedTextFallsBelowThreshold) {
  const auto m = toy_model();
  // half and half: no label dominates
  const auto d = classify(repeat("ab", 20) + " " + repeat("cd", 20), m);
  EXPECT_LT(d.confidence, 0.8);
  const auto decision = decide_language(d, d.label, 0.8);
  EXPECT_FALSE(decision.kept());
  EXPECT_EQ(decision.reasons, std::vector<std::string>{"low_confidence"});
}

TEST(Langid, GatesOnTargetAndThreshold) {
  const auto m = toy_model();
  Document doc{"1", repeat("ab", 30), "s"};
  EXPECT_TRUE(filter_language(doc, m, "x", 0.8).kept());
  auto wrong = filter_language(doc, m, "y", 0.8);
  EXPECT_EQ(wrong.reasons, std::vector<std::string>{"wrong_language"});
  EXPECT_TRUE(filter_language(doc, m, "x", 0.0).kept());
  EXPECT_THROW(filter_language(doc, m, "x", 1.5), ConfigError);
}

TEST(Langid, EmptyTextIsUnclassifiable) {
  const auto m = toy_model();
  EXPECT_THROW(classify("  \n\t", m), UnclassifiableError);
  Document doc{"e", " ", "s"};
  EXPECT_EQ(filter_language(doc, m, "x", 0.8).reasons, std::vector<std::string>{"empty_text"});
}

TEST(Langid, TrainingPreconditions) {
  EXPECT_THROW(train_langid({{repeat("ab", 600), "x"}}), ConfigError);
  EXPECT_THROW(train_langid({{repeat("ab", 600), "x"}, {"cd", "y"}}), DataError);
  EXPECT_THROW(train_langid({{repeat("ab", 600), "x"}, {repeat("cd", 600), "y"}}, 0.0), ConfigError);
}

TEST(Langid, CaseAndWhitespaceInsensitive) {
  const auto& m = testkit::langid_model();
  const auto a = classify("The history of the world", m);
  const auto b = classify("THE   history\nof the\tWORLD", m);
  EXPECT_NEAR(a.confidence, b.confidence, 1e-12);
}

TEST(Langid, SerializationRoundTrip) {
  const auto& m = testkit::langid_model();
  std::stringstream buf;
  write_langid(m, buf);
  const auto back = read_langid(buf);
  EXPECT_EQ(back.labels, m.labels);
  EXPECT_EQ(back.smoothing, m.smoothing);
  const std::string probe = "این یک متن آزمایشی است و نه چیز دیگر";
  EXPECT_EQ(classify(probe, back).posteriors, classify(probe, m).posteriors);
}

TEST(Langid, CorruptModelIsDataError) {
  std::stringstream bad("FGLANGIDxx");
  EXPECT_THROW(read_langid(bad), DataError);
  std::stringstream wrong("NOTAMODEL");
  EXPECT_THROW(read_langid(wrong), DataError);
  std::stringstream full;
  write_langid(toy_model(), full);
  std::string bytes = full.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(read_langid(truncated), DataError);
}

}  // namespace
}  // namespace forge
