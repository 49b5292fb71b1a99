// Trains a trigram model on a handful of sentences and decodes the same
// concept set with greedy search and with enhance-then-filter sampling.

#include <iostream>
#include <string>
#include <vector>

#include "ifdid/ifdid.hpp"

int main() {
  using namespace ifdid;

  const std::vector<std::string> lines{
      "the dog catches the ball in the park .",
      "the boy throws the ball and the dog runs .",
      "a girl climbs the wall near the river .",
      "the dog sleeps in the garden after lunch .",
      "the girl throws a stone into the river .",
  };
  const Vocabulary vocab = build_vocabulary(lines, TokenizerMode::whitespace);
  const Corpus corpus = make_corpus(lines, vocab, TokenizerMode::whitespace);
  const NGramLM lm = NGramLM::train(corpus, vocab, 3, AddK{0.01});

  const std::vector<std::string> concepts{"dog", "river", "throws"};
  for (Strategy s : {Strategy::greedy, Strategy::ifdid}) {
    DecodeConfig cfg;
    cfg.strategy = s;
    cfg.max_length = 16;
    cfg.seed = 42;
    cfg.filter.epsilon = 1.0;
    for (const auto& c : concepts) cfg.input_pieces.push_back({vocab.id(c)});
    const DecodeRecord rec = decode(lm, cfg, make_guidance(cfg, vocab));
    std::cout << to_string(s) << ": " << detokenize(vocab.decode(rec.tokens), TokenizerMode::whitespace) << "\n";
  }
}
