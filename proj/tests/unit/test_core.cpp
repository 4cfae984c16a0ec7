#include <gtest/gtest.h>

#include "goalseq/core.hpp"
#include "goalseq/datasets.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

namespace goalseq {
namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("goalseq_core_" + name);
}

TEST(Vocabulary, FrequencyOrderWithSpecialsFirst) {
  const Vocabulary v = build_vocab({{"a", "b"}, {"a"}}, 10);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{kPadToken, kStartToken, kUnkToken, "a", "b"}));
  EXPECT_NE(v.pad_id(), v.start_id());
}

TEST(Vocabulary, TiesBreakLexicographically) {
  const Vocabulary v = build_vocab({{"y", "x"}}, 10);
  EXPECT_EQ(v.token(3), "x");
  EXPECT_EQ(v.token(4), "y");
}

TEST(Vocabulary, MaxSizeCountsUnk) {
  const Vocabulary v = build_vocab({{"a", "a", "b", "c"}}, 2);
  EXPECT_EQ(v.size(), 4);  // pad, start, unk, a
  EXPECT_EQ(v.id("c"), v.unk_id());
}

TEST(Vocabulary, EmptyCorpusRejected) { EXPECT_THROW(build_vocab({}, 10), ValidationError); }

TEST(Vocabulary, DeskCorpusHas32Entries) {
  const auto lines = synth_grammar_corpus(1000, 2024);
  std::vector<std::vector<std::string>> corpus;
  std::set<std::string> distinct;
  for (const auto& l : lines) {
    corpus.push_back(split_whitespace(l));
    distinct.insert(corpus.back().begin(), corpus.back().end());
  }
  EXPECT_EQ(distinct.size(), 29u);
  EXPECT_EQ(build_vocab(corpus, 30).size(), 32);
}

TEST(Vocabulary, IdsDenseAndRoundTrip) {
  const Vocabulary v = build_vocab({{"the", "cat"}, {"the", "dog", "ran"}}, 10);
  for (int i = 0; i < v.size(); ++i) EXPECT_EQ(v.id(v.token(i)), i);
  EXPECT_THROW(v.token(v.size()), ValidationError);
  EXPECT_THROW(v.token(-1), ValidationError);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  const Vocabulary v = build_vocab({{"the", "cat"}, {"the", "dog"}}, 10);
  const auto path = temp_path("vocab.txt");
  v.save(path);
  const Vocabulary w = Vocabulary::load(path);
  EXPECT_EQ(v.tokens(), w.tokens());
  std::filesystem::remove(path);
}

TEST(Vocabulary, RejectsMissingSpecials) {
  EXPECT_THROW(Vocabulary({"a", "b"}), ValidationError);
  EXPECT_THROW(Vocabulary({kPadToken, kStartToken, kUnkToken, "a", "a"}), ValidationError);
}

TEST(Encode, PadsShortSentence) {
  const Vocabulary v = build_vocab({{"a"}}, 10);
  const std::vector<std::string> s{"a"};
  const TokenSequence seq = encode(s, v, 3);
  EXPECT_EQ(seq.ids, (std::vector<int>{v.id("a"), v.pad_id(), v.pad_id()}));
  EXPECT_EQ(seq.true_length, 1);
  EXPECT_NO_THROW(validate(seq, v));
}

TEST(Encode, TruncatesLongSentence) {
  const Vocabulary v = build_vocab({{"w"}}, 10);
  const std::vector<std::string> s(40, "w");
  const TokenSequence seq = encode(s, v, 37);
  EXPECT_EQ(seq.length(), 37);
  EXPECT_EQ(seq.true_length, 37);
}

TEST(Encode, OovMapsToUnk) {
  const Vocabulary v = build_vocab({{"a"}}, 10);
  const std::vector<std::string> s{"zz", "qq"};
  const TokenSequence seq = encode(s, v, 4);
  EXPECT_EQ(seq.ids[0], v.unk_id());
  EXPECT_EQ(seq.ids[1], v.unk_id());
  EXPECT_EQ(seq.true_length, 2);
}

TEST(Decode, StripsPads) {
  const Vocabulary v = build_vocab({{"a"}}, 10);
  TokenSequence seq{{v.id("a"), 0, 0}, 1};
  EXPECT_EQ(decode(seq, v), (std::vector<std::string>{"a"}));
  TokenSequence all_pad{{0, 0, 0}, 0};
  EXPECT_TRUE(decode(all_pad, v).empty());
}

TEST(Decode, OutOfRangeIdRejected) {
  const Vocabulary v = build_vocab({{"a"}}, 10);
  TokenSequence seq{{99, 0}, 1};
  EXPECT_THROW(decode(seq, v), ValidationError);
  EXPECT_THROW(validate(seq, v), ValidationError);
}

TEST(Validate, PadRegionMustBeTrailing) {
  const Vocabulary v = build_vocab({{"a"}}, 10);
  TokenSequence gap{{v.id("a"), 0, v.id("a")}, 3};
  EXPECT_THROW(validate(gap, v), ValidationError);
}

TEST(RoundTrip, DeskCorpusSentences) {
  const auto lines = synth_grammar_corpus(100, 5);
  std::vector<std::vector<std::string>> corpus;
  for (const auto& l : lines) corpus.push_back(split_whitespace(l));
  const Vocabulary v = build_vocab(corpus, 30);
  for (const auto& s : corpus) {
    ASSERT_LE(s.size(), 12u);
    EXPECT_EQ(decode(encode(s, v, 12), v), s);
  }
}

TEST(Rng, SeedsReproduce) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_NE(Rng(42).normal(), c.normal());
}

TEST(Rng, MixSeedSeparatesLanes) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a) {
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(mix_seed(7, a, b));
  }
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_EQ(mix_seed(7, 3, 4), mix_seed(7, 3, 4));
}

TEST(Rng, GumbelMeanIsEulerGamma) {
  Rng r(1);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += r.gumbel();
  EXPECT_NEAR(sum / n, 0.5772156649, 0.01);
}

TEST(Text, SplitAndJoin) {
  EXPECT_EQ(split_whitespace("  a\tb  c \n"), (std::vector<std::string>{"a", "b", "c"}));
  const std::vector<std::string> toks{"a", "b"};
  EXPECT_EQ(join_tokens(toks), "a b");
}

}  // namespace
}  // namespace goalseq
