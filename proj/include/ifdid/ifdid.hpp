#pragma once

#include "ifdid/beam_search.hpp"
#include "ifdid/decode_config.hpp"
#include "ifdid/decoders.hpp"
#include "ifdid/embeddings.hpp"
#include "ifdid/enhance.hpp"
#include "ifdid/error.hpp"
#include "ifdid/info_filter.hpp"
#include "ifdid/language_model.hpp"
#include "ifdid/metrics.hpp"
#include "ifdid/ngram_lm.hpp"
#include "ifdid/prob_dist.hpp"
#include "ifdid/rng.hpp"
#include "ifdid/steps.hpp"
#include "ifdid/vocabulary.hpp"
