#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "support.hpp"

using namespace ifdid;
using testing_support::Gen;
using testing_support::ScratchDir;

namespace {

using Strings = std::vector<std::string>;

struct Trained {
  Vocabulary vocab;
  NGramLM lm;
};

Trained train(const Strings& vocab_lines, const Strings& train_lines, int order, Smoothing s) {
  auto vocab = build_vocabulary(vocab_lines, TokenizerMode::whitespace);
  auto corpus = make_corpus(train_lines, vocab, TokenizerMode::whitespace);
  auto lm = NGramLM::train(corpus, vocab, order, std::move(s));
  return {std::move(vocab), std::move(lm)};
}

TEST(NGramTrain, CountsIncludePaddingAndEos) {
  auto [v, lm] = train({"a b"}, {"a b"}, 2, AddK{1.0});
  const TokenId a = v.id("a");
  const TokenId b = v.id("b");
  EXPECT_EQ(lm.count({Vocabulary::kBos}, a), 1u);
  EXPECT_EQ(lm.count({a}, b), 1u);
  EXPECT_EQ(lm.count({b}, Vocabulary::kEos), 1u);
  EXPECT_EQ(lm.count({a}, a), 0u);
}

TEST(NGramTrain, UnigramAddK) {
  // Three a's plus the document's EOS make four observed tokens.
  const double k = 0.5;
  auto [v, lm] = train({"a a a"}, {"a a a"}, 1, AddK{k});
  const double n = static_cast<double>(v.size());
  const auto q = lm.next_distribution({});
  EXPECT_NEAR(q[v.id("a")], (3 + k) / (4 + k * n), 1e-12);
  EXPECT_NEAR(q[Vocabulary::kEos], (1 + k) / (4 + k * n), 1e-12);
}

TEST(NGramTrain, BigramAddOneHandCount) {
  auto [v, lm] = train({"a b", "a c"}, {"a b", "a c"}, 2, AddK{1.0});
  ASSERT_EQ(v.size(), 6u);
  const std::vector<TokenId> ctx{v.id("a")};
  EXPECT_NEAR(lm.next_distribution(ctx)[v.id("b")], 0.25, 1e-12);
}

TEST(NGramTrain, BigramTwoSevenths) {
  // vocabulary of six ids (three specials, a, b, c); only "a b" is trained
  auto [v, lm] = train({"a b", "c"}, {"a b"}, 2, AddK{1.0});
  ASSERT_EQ(v.size(), 6u);
  const std::vector<TokenId> ctx{v.id("a")};
  const auto q = lm.next_distribution(ctx);
  for (std::size_t i = 0; i < q.size(); ++i) {
    EXPECT_NEAR(q.vector()[i], static_cast<TokenId>(i) == v.id("b") ? 2.0 / 7.0 : 1.0 / 7.0, 1e-12);
  }
}

TEST(NGramTrain, RejectsBadParameters) {
  const auto v = build_vocabulary(Strings{"a"}, TokenizerMode::whitespace);
  const auto c = make_corpus(Strings{"a"}, v, TokenizerMode::whitespace);
  EXPECT_THROW(NGramLM::train(c, v, 0), ParameterError);
  EXPECT_THROW(NGramLM::train(c, v, 2, AddK{0.0}), ParameterError);
  EXPECT_THROW(NGramLM::train(c, v, 2, Interpolated{{0.5, 0.5}}), ParameterError);
  EXPECT_THROW(NGramLM::train(Corpus{}, v, 2), ParameterError);
}

TEST(NGramNext, UnigramIgnoresContext) {
  auto [v, lm] = train({"a b c a"}, {"a b c a"}, 1, AddK{0.1});
  const std::vector<TokenId> ctx1{v.id("a")};
  const std::vector<TokenId> ctx2{v.id("c"), v.id("b")};
  EXPECT_EQ(lm.next_distribution(ctx1), lm.next_distribution({}));
  EXPECT_EQ(lm.next_distribution(ctx2), lm.next_distribution({}));
}

TEST(NGramNext, MarkovPropertyAndFullSupport) {
  const Strings lines{"the dog runs to the park", "the cat runs home", "a dog sleeps in the park"};
  Gen gen(3);
  for (int order : {1, 2, 3, 4}) {
    for (const Smoothing& s : {Smoothing{AddK{0.01}}, Smoothing{Interpolated{std::vector<double>(
                                                          static_cast<std::size_t>(order) + 1, 1.0)}}}) {
      auto [v, lm] = train(lines, lines, order, s);
      for (int trial = 0; trial < 100; ++trial) {
        auto ctx = gen.tokens(gen.range(0, 8), v.size());
        auto q = lm.next_distribution(ctx);
        EXPECT_NEAR(testing_support::sum(q), 1.0, 1e-9);
        for (double p : q.probs()) EXPECT_GT(p, 0.0);
        // a different prefix before the last order-1 tokens changes nothing
        auto other = gen.tokens(gen.range(0, 4), v.size());
        const std::size_t keep = std::min(ctx.size(), static_cast<std::size_t>(order - 1));
        if (ctx.size() >= static_cast<std::size_t>(order - 1)) {
          other.insert(other.end(), ctx.end() - static_cast<std::ptrdiff_t>(keep), ctx.end());
          EXPECT_EQ(lm.next_distribution(other), q);
        }
      }
    }
  }
}

TEST(NGramNext, OutOfRangeContextMapsToUnk) {
  auto [v, lm] = train({"a b"}, {"a b"}, 2, AddK{0.1});
  const std::vector<TokenId> bad{999};
  const std::vector<TokenId> unk{Vocabulary::kUnk};
  EXPECT_EQ(lm.next_distribution(bad), lm.next_distribution(unk));
}

TEST(NGramLogprob, SumsStepwiseLookups) {
  const Strings lines{"x y z", "y z x", "z z y"};
  auto [v, lm] = train(lines, lines, 3, AddK{0.2});
  Gen gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto seq = gen.tokens(gen.range(1, 10), v.size());
    double expected = 0.0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      expected += std::log(lm.next_distribution(std::span(seq).first(i))[seq[i]]);
    }
    EXPECT_NEAR(lm.sequence_logprob(seq), expected, 1e-9);
    EXPECT_LE(lm.sequence_logprob(seq), 0.0);
  }
  const std::vector<TokenId> one{v.id("x")};
  EXPECT_DOUBLE_EQ(lm.sequence_logprob(one), std::log(lm.next_distribution({})[v.id("x")]));
  EXPECT_THROW(lm.sequence_logprob(std::vector<TokenId>{}), ParameterError);
}

TEST(NGramLogprob, DeterministicModelScoresZero) {
  // every context has a single successor and k is tiny
  auto [v, lm] = train({"p q r"}, {"p q r"}, 2, AddK{1e-15});
  const auto seq = v.encode(Strings{"p", "q", "r"});
  std::vector<TokenId> with_eos = seq;
  with_eos.push_back(Vocabulary::kEos);
  EXPECT_NEAR(lm.sequence_logprob(with_eos), 0.0, 1e-9);
}

TEST(NGramLogprob, TrainingTextIsMoreLikelyThanHeldOut) {
  // fixture-free sanity trend over random splits of a small synthetic corpus
  Gen gen(17);
  const Strings subjects{"dog", "cat", "boy", "girl", "man"};
  const Strings verbs{"sees", "likes", "finds", "eats", "takes"};
  const Strings objects{"ball", "cake", "book", "stone", "hat", "box"};
  Strings lines;
  for (int i = 0; i < 120; ++i) {
    lines.push_back("the " + subjects[gen.index(5)] + " " + verbs[gen.index(5)] + " the " + objects[gen.index(6)] +
                    " .");
  }
  const auto vocab = build_vocabulary(lines, TokenizerMode::whitespace);
  int wins = 0;
  for (int split = 0; split < 10; ++split) {
    Strings shuffled = lines;
    std::shuffle(shuffled.begin(), shuffled.end(), gen.engine());
    const Strings train_lines(shuffled.begin(), shuffled.begin() + 60);
    const Strings held_out(shuffled.begin() + 60, shuffled.end());
    const auto lm = NGramLM::train(make_corpus(train_lines, vocab, TokenizerMode::whitespace), vocab, 3);
    auto encode_all = [&](const Strings& ls) {
      std::vector<std::vector<TokenId>> out;
      for (const auto& l : ls) out.push_back(vocab.encode(tokenize(l, TokenizerMode::whitespace)));
      return out;
    };
    const auto seen = encode_all(train_lines);
    const auto unseen = encode_all(held_out);
    wins += perplexity(lm, std::span<const std::vector<TokenId>>(seen)) <=
            perplexity(lm, std::span<const std::vector<TokenId>>(unseen));
  }
  EXPECT_GE(wins, 8);
}

TEST(NGramPersistence, SaveLoadIsByteStable) {
  const Strings lines{"a b c", "b c a b", "c"};
  for (const Smoothing& s : {Smoothing{AddK{0.3}}, Smoothing{Interpolated{{0.1, 0.3, 0.6}}}}) {
    auto [v, lm] = train(lines, lines, 2, s);
    std::ostringstream first;
    lm.save(first);
    std::istringstream in(first.str());
    const auto loaded = NGramLM::load(in);
    std::ostringstream second;
    loaded.save(second);
    EXPECT_EQ(first.str(), second.str());
    EXPECT_EQ(loaded.vocabulary(), v);
    const std::vector<TokenId> ctx{v.id("b")};
    EXPECT_EQ(loaded.next_distribution(ctx), lm.next_distribution(ctx));
  }
}

TEST(NGramPersistence, FileRoundTripAndErrors) {
  ScratchDir dir;
  auto [v, lm] = train({"a b"}, {"a b"}, 2, AddK{0.1});
  const auto path = (dir.path() / "lm.txt").string();
  lm.save(path);
  EXPECT_EQ(NGramLM::load(path).order(), 2);
  EXPECT_THROW(NGramLM::load((dir.path() / "missing.txt").string()), IoError);
  std::istringstream garbage("ifdid-ngram 2\n");
  EXPECT_THROW(NGramLM::load(garbage), ParseError);
  std::istringstream truncated("ifdid-ngram 1\norder 2\n");
  EXPECT_THROW(NGramLM::load(truncated), ParseError);
}

TEST(Replay, ReturnsStepsInOrderThenErrors) {
  std::istringstream in("0.5 0.5 0\n0.1 0.2 0.7\n1 0 0\n");
  auto provider = ReplayProvider::load(in);
  EXPECT_EQ(provider.width(), 3u);
  EXPECT_EQ(provider.replay_next().vector(), (std::vector<double>{0.5, 0.5, 0.0}));
  EXPECT_NEAR(provider.replay_next()[2], 0.7, 1e-12);
  EXPECT_EQ(provider.replay_next(), ProbDist::one_hot(3, 0));
  EXPECT_EQ(provider.remaining(), 0u);
  EXPECT_THROW(provider.replay_next(), EndOfStreamError);
  provider.rewind();
  EXPECT_EQ(provider.remaining(), 3u);
}

TEST(Replay, NormalizesRowsOnLoad) {
  std::istringstream in("0.49 0.49\n");
  auto provider = ReplayProvider::load(in);
  const auto q = provider.replay_next();
  EXPECT_NEAR(q[0], 0.5, 1e-12);
  EXPECT_NEAR(testing_support::sum(q), 1.0, 1e-12);
}

TEST(Replay, RejectsBadRowsWithRowNumber) {
  std::istringstream negative("0.5 0.5\n0.5 -0.1\n");
  try {
    ReplayProvider::load(negative);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream ragged("0.5 0.5\n0.2 0.3 0.5\n");
  EXPECT_THROW(ReplayProvider::load(ragged), ParseError);
  std::istringstream zero("0 0\n");
  EXPECT_THROW(ReplayProvider::load(zero), ParseError);
}

TEST(Replay, DrivesTheDecoder) {
  std::istringstream in("0 0 0 1\n0 0 0 1\n0 1 0 0\n");
  auto provider = ReplayProvider::load(in);
  ReplayModel model(provider);
  DecodeConfig cfg;
  cfg.max_length = 10;
  const auto rec = decode(model, cfg);
  EXPECT_EQ(rec.tokens, (std::vector<TokenId>{3, 3, Vocabulary::kEos}));
  EXPECT_EQ(rec.termination, Termination::eos);
}

}  // namespace
