#include <gtest/gtest.h>

#include "sublens/corpus.hpp"
#include "sublens/errors.hpp"
#include "test_support.hpp"

namespace sublens {
namespace {

const char* kValid =
    R"({"word":"bank","s1":"The bank approved the loan.","s2":"The bank of the river.","i1":1,"i2":1})";

std::string corpus_error(const std::string& text) {
  try {
    parse_corpus(text, "t");
  } catch (const CorpusError& e) {
    return e.what();
  }
  return {};
}

TEST(LemmaMatches, CaseAccentsAndTrailingPunctuation) {
  EXPECT_TRUE(lemma_matches("Bank", "bank"));
  EXPECT_TRUE(lemma_matches("bank.", "bank"));
  EXPECT_TRUE(lemma_matches("Caf\xC3\xA9", "cafe"));
  EXPECT_FALSE(lemma_matches("banks", "bank"));
}

TEST(ParseCorpus, ValidSample) {
  const auto c = parse_corpus(std::string(kValid) + "\n", "t");
  ASSERT_EQ(c.samples.size(), 1u);
  EXPECT_EQ(c.samples[0].word, "bank");
  EXPECT_EQ(c.samples[0].index2, 1u);
  EXPECT_FALSE(c.samples[0].sense1);
}

TEST(ParseCorpus, LemmaMismatchIsReported) {
  const auto msg = corpus_error(
      R"({"word":"bank","s1":"The banks approved the loan.","s2":"The bank of the river.","i1":1,"i2":1})");
  EXPECT_NE(msg.find("banks"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
}

TEST(ParseCorpus, EmptyInputIsEmptyCorpusError) {
  EXPECT_THROW(parse_corpus("", "t"), EmptyCorpusError);
  EXPECT_THROW(parse_corpus("\n  \n", "t"), EmptyCorpusError);
}

TEST(ParseCorpus, AllProblemsCollectedWithLineNumbers) {
  const std::string text = std::string(kValid) + "\n\n" + "{not json}\n" +
                           R"({"word":"bank","s1":"The bank.","s2":"The bank.","i1":7,"i2":1})" + "\n" +
                           R"({"word":"bank","s1":"The bank."})" + "\n";
  const auto msg = corpus_error(text);
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
  EXPECT_NE(msg.find("out of range"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 5"), std::string::npos) << msg;
  EXPECT_EQ(msg.find("line 1:"), std::string::npos) << msg;
}

TEST(ParseCorpus, MissingFileIsCorpusError) {
  EXPECT_THROW(load_corpus(testing::data_dir() / "no-such-corpus.jsonl"), CorpusError);
}

TEST(BuiltinCorpus, Properties) {
  const auto c = resolve_corpus("builtin");
  EXPECT_EQ(c.name, "builtin");
  EXPECT_GE(c.samples.size(), 10u);
  for (const auto& s : c.samples) {
    EXPECT_EQ(s.index1, 1u);
    EXPECT_EQ(s.index2, 1u);
    EXPECT_EQ(validate_sample(s), "") << s.word;
    EXPECT_TRUE(s.sense1 && s.sense2);
    EXPECT_NE(s.sense1, s.sense2);
  }
}

TEST(BuiltinCorpus, TargetsTokenizeWithoutUnknownsInReferenceVocab) {
  const auto v = Vocab::load(testing::data_dir() / "vocab.txt");
  for (const auto& s : builtin_sample_corpus().samples) {
    for (const auto* sent : {&s.sentence1, &s.sentence2}) {
      const auto ts = encode_sentence(v, *sent, 64);
      EXPECT_FALSE(ts.range_has_unk(target_span(ts, 1), v.unk())) << *sent;
    }
  }
}

TEST(SerializeCorpus, RoundTrip) {
  auto c = builtin_sample_corpus();
  testing::TempDir dir("corpus");
  testing::write_text(dir / "builtin.jsonl", serialize_corpus(c));
  const auto back = load_corpus(dir / "builtin.jsonl");
  EXPECT_EQ(back.samples, c.samples);
  EXPECT_EQ(serialize_corpus(back), serialize_corpus(c));
}

}  // namespace
}  // namespace sublens
