#pragma once

#include <cstdint>

#include "selfvocab/bpe.hpp"

namespace selfvocab::metrics {

// Vocabulary statistics of one segmented corpus.
struct VocabMetrics {
  double entropy = 0.0;          // bits per character
  double avg_token_length = 0.0; // characters per token occurrence, marker = 1 char
  std::size_t vocab_size = 0;
  double ttr_scaled = 0.0; // 1000 * vocab_size / token_occurrences
  std::uint64_t token_occurrences = 0;
};

// Token-distribution entropy normalized by the frequency-weighted mean token
// length in characters (end-of-word marker counted as one character), base-2.
// Throws EmptyInputError when the corpus has no token occurrences.
VocabMetrics corpus_entropy(const bpe::SegmentedCorpus &segmented);
VocabMetrics corpus_entropy(const bpe::Vocabulary &vocab);

// Negative entropy change between consecutive iterations normalized by the
// earlier vocabulary size.
double vocab_shift(double entropy_next, double entropy_curr, std::size_t vocab_size_curr);

// Percentage of the reference vocabulary's types that also occur in v_new.
double overlap_percent(const bpe::Vocabulary &v_new, const bpe::Vocabulary &v_ref);

// 1000 * distinct types / total occurrences.
double type_token_ratio(const bpe::SegmentedCorpus &segmented);

// |types used in inference output| / |types in the reference corpus|.
double vocab_compression(const bpe::Vocabulary &inference_vocab,
                         const bpe::Vocabulary &test_vocab);

// Character length of a subword token with the marker counted as one.
std::size_t token_char_length(const std::string &token);

} // namespace selfvocab::metrics
