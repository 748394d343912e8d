#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "selfvocab/corpus.hpp"

namespace selfvocab::eval {

struct BleuReport {
  double score = 0.0;                       // 0..100
  std::array<double, 4> precisions{};       // modified n-gram precisions, n = 1..4
  double brevity_penalty = 1.0;             // <= 1
  std::uint64_t hyp_length = 0;
  std::uint64_t ref_length = 0;
};

// Corpus-level BLEU over word sequences (score after detokenization, never on
// subwords). Per-sentence clipped n-gram counts are aggregated at corpus
// level; brevity penalty exp(1 - ref/hyp) applies when the hypothesis side is
// shorter. No smoothing unless add_one_smoothing is set. Throws
// AlignmentError on unequal line counts and EmptyInputError when there are no
// hypotheses.
BleuReport corpus_bleu(std::span<const WordSequence> hypotheses,
                       std::span<const WordSequence> references,
                       bool add_one_smoothing = false);

} // namespace selfvocab::eval
