#include <gtest/gtest.h>

#include "support.hpp"

using namespace ifdid;
using testing_support::Gen;
using testing_support::ScratchDir;

namespace {

using Strings = std::vector<std::string>;

TEST(Tokenize, WhitespaceSplit) {
  EXPECT_EQ(tokenize("a b a", TokenizerMode::whitespace), (Strings{"a", "b", "a"}));
  EXPECT_EQ(tokenize("  a\t b \n", TokenizerMode::whitespace), (Strings{"a", "b"}));
}

TEST(Tokenize, EmptyText) {
  EXPECT_TRUE(tokenize("", TokenizerMode::whitespace).empty());
  EXPECT_TRUE(tokenize("", TokenizerMode::character).empty());
}

TEST(Tokenize, CharacterMode) {
  EXPECT_EQ(tokenize("ab a", TokenizerMode::character), (Strings{"a", "b", " ", "a"}));
  EXPECT_EQ(tokenize("裙子。", TokenizerMode::character), (Strings{"裙", "子", "。"}));
}

TEST(Tokenize, RejectsInvalidUtf8) {
  EXPECT_THROW(tokenize("ab\xff", TokenizerMode::whitespace), ParseError);
  EXPECT_THROW(tokenize("\xe4\xb8", TokenizerMode::character), ParseError);
  EXPECT_THROW(tokenize("\xc0\xaf", TokenizerMode::character), ParseError);  // overlong
}

TEST(Tokenize, RoundTripsNormalizedText) {
  for (auto mode : {TokenizerMode::whitespace, TokenizerMode::character}) {
    const std::string text = "the dog  catches\tthe ball";
    const auto once = detokenize(tokenize(text, mode), mode);
    EXPECT_EQ(detokenize(tokenize(once, mode), mode), once);
  }
  EXPECT_EQ(detokenize(tokenize("a  b\tc", TokenizerMode::whitespace), TokenizerMode::whitespace), "a b c");
  EXPECT_EQ(detokenize(tokenize("a  b", TokenizerMode::character), TokenizerMode::character), "a  b");
}

TEST(ParseTokenizerMode, KnownNames) {
  EXPECT_EQ(parse_tokenizer_mode("whitespace"), TokenizerMode::whitespace);
  EXPECT_EQ(parse_tokenizer_mode("char"), TokenizerMode::character);
  EXPECT_THROW(parse_tokenizer_mode("bpe"), ParameterError);
}

TEST(BuildVocabulary, FrequencyOrder) {
  const Strings lines{"a b", "a c"};
  const auto v = build_vocabulary(lines, TokenizerMode::whitespace, 1);
  ASSERT_EQ(v.size(), 6u);
  EXPECT_EQ(v.token(Vocabulary::kBos), "<s>");
  EXPECT_EQ(v.token(Vocabulary::kEos), "</s>");
  EXPECT_EQ(v.token(Vocabulary::kUnk), "<unk>");
  EXPECT_EQ(v.id("a"), 3);
  // b and c tie on frequency; lexicographic order decides
  EXPECT_EQ(v.id("b"), 4);
  EXPECT_EQ(v.id("c"), 5);
}

TEST(BuildVocabulary, MinCountThreshold) {
  const Strings lines{"a b", "a c"};
  const auto v = build_vocabulary(lines, TokenizerMode::whitespace, 2);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.id("a"), 3);
  EXPECT_EQ(v.id("b"), Vocabulary::kUnk);
  EXPECT_EQ(v.id("c"), Vocabulary::kUnk);
}

TEST(BuildVocabulary, EmptyCorpusHasOnlySpecials) {
  const auto v = build_vocabulary(Strings{}, TokenizerMode::whitespace, 1);
  EXPECT_EQ(v.size(), 3u);
}

TEST(BuildVocabulary, RejectsZeroMinCount) {
  EXPECT_THROW(build_vocabulary(Strings{"a"}, TokenizerMode::whitespace, 0), ParameterError);
}

TEST(BuildVocabulary, UnreadableFileNamesPath) {
  try {
    build_vocabulary_from_file("/nonexistent/corpus.txt", TokenizerMode::whitespace);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), "/nonexistent/corpus.txt");
  }
}

TEST(Vocabulary, IdsAreContiguousAndBijective) {
  Gen gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    Strings lines;
    for (std::size_t l = 0; l < gen.range(1, 8); ++l) {
      std::string line;
      for (std::size_t w = 0; w < gen.range(0, 10); ++w) line += "w" + std::to_string(gen.index(20)) + " ";
      lines.push_back(line);
    }
    const std::size_t min_count = gen.range(1, 3);
    const auto v = build_vocabulary(lines, TokenizerMode::whitespace, min_count);
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_EQ(v.id(v.token(static_cast<TokenId>(i))), static_cast<TokenId>(i));
    }
    EXPECT_EQ(v, build_vocabulary(lines, TokenizerMode::whitespace, min_count));
  }
}

TEST(Vocabulary, EncodeDecodeIdentityInVocabulary) {
  Gen gen(11);
  const Strings lines{"the dog catches the ball", "a cat sleeps", "the girl reads a book"};
  const auto v = build_vocabulary(lines, TokenizerMode::whitespace);
  for (int trial = 0; trial < 200; ++trial) {
    Strings seq;
    const std::size_t len = gen.range(0, 12);
    for (std::size_t i = 0; i < len; ++i) seq.push_back(v.token(static_cast<TokenId>(gen.range(3, v.size() - 1))));
    EXPECT_EQ(v.decode(v.encode(seq)), seq);
  }
}

TEST(Vocabulary, DeterministicAcrossBuilds) {
  const Strings lines{"b a c", "c a", "d d b"};
  const auto a = build_vocabulary(lines, TokenizerMode::whitespace);
  const auto b = build_vocabulary(lines, TokenizerMode::whitespace);
  EXPECT_EQ(a.tokens(), b.tokens());
  Strings reversed(lines.rbegin(), lines.rend());
  EXPECT_EQ(build_vocabulary(reversed, TokenizerMode::whitespace).tokens(), a.tokens());
}

TEST(Vocabulary, UnknownTokensMapToUnk) {
  const auto v = build_vocabulary(Strings{"a b"}, TokenizerMode::whitespace);
  EXPECT_EQ(v.id("zebra"), Vocabulary::kUnk);
  EXPECT_THROW(v.token(99), ParameterError);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  ScratchDir dir;
  const auto v = build_vocabulary(Strings{"x y z x", "z z"}, TokenizerMode::whitespace);
  const auto path = (dir.path() / "vocab.txt").string();
  v.save(path);
  EXPECT_EQ(Vocabulary::load(path), v);
  const auto lines = read_lines(path);
  ASSERT_GE(lines.size(), 3u);
  EXPECT_EQ(lines[0], "<s>");
  EXPECT_EQ(lines[3], "z");
}

TEST(Vocabulary, LoadRejectsMissingSpecials) {
  ScratchDir dir;
  const auto p = dir.write("bad.txt", "a\nb\n");
  EXPECT_THROW(Vocabulary::load(p.string()), ParseError);
}

TEST(Corpus, BlankLinesSkippedAndCountsConsistent) {
  const Strings lines{"a b", "", "   ", "b c d"};
  const auto v = build_vocabulary(lines, TokenizerMode::whitespace);
  const auto c = make_corpus(lines, v, TokenizerMode::whitespace, "mem");
  ASSERT_EQ(c.documents.size(), 2u);
  std::size_t total = 0;
  for (const auto& d : c.documents) {
    total += d.size();
    for (TokenId t : d) EXPECT_LT(static_cast<std::size_t>(t), v.size());
  }
  EXPECT_EQ(c.token_count, total);
  EXPECT_EQ(c.source, "mem");
}

TEST(Corpus, LoadFromFileStripsCarriageReturns) {
  ScratchDir dir;
  const auto p = dir.write("c.txt", "a b\r\nb a\r\n");
  const auto v = build_vocabulary_from_file(p.string(), TokenizerMode::whitespace);
  EXPECT_FALSE(v.contains("b\r"));
  const auto c = load_corpus(p.string(), v, TokenizerMode::whitespace);
  EXPECT_EQ(c.token_count, 4u);
}

}  // namespace
