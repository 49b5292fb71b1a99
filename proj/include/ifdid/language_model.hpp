#pragma once

#include <concepts>
#include <cstddef>
#include <span>

#include "ifdid/prob_dist.hpp"
#include "ifdid/vocabulary.hpp"

namespace ifdid {

/// Anything that yields q(y_t | y_<t) over a fixed vocabulary. `context` is
/// the prompt followed by the tokens emitted so far; id 1 is end-of-sequence.
template <typename M>
concept LanguageModel = requires(M& model, std::span<const TokenId> context) {
  { model.next_distribution(context) } -> std::convertible_to<ProbDist>;
  { model.vocab_size() } -> std::convertible_to<std::size_t>;
};

}  // namespace ifdid
