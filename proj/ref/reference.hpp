#pragma once

// Serial reference implementations and brute-force oracles. These stay
// deliberately naive (strings, ordered maps, straight loops) so they can
// cross-check the library's parallel kernels in tests and serve as the
// baseline in the benchmark. Not linked into the CLI.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "selfvocab/bpe.hpp"
#include "selfvocab/corpus.hpp"
#include "selfvocab/eval.hpp"

namespace selfvocab::ref {

// Brute-force BPE learner: fully recounts all adjacent symbol pairs after
// every merge, picks the highest count (ties: smallest left then right by
// byte order) and stops when the best count drops below 2.
std::vector<bpe::MergeRule> learn_bpe_bruteforce(const std::vector<std::string> &words,
                                                 const std::vector<std::uint64_t> &counts,
                                                 std::size_t target_merges,
                                                 const std::string &marker = bpe::kMarker);

// Replays recorded rules on a word's character sequence, ascending rank.
std::vector<std::string> segment_word_replay(const std::vector<bpe::MergeRule> &rules,
                                             const std::string &word,
                                             const std::string &marker = bpe::kMarker);

// Serial twins of the library's parallel kernels.
std::map<std::pair<std::string, std::string>, std::uint64_t>
count_pairs_serial(const std::vector<std::string> &words,
                   const std::vector<std::uint64_t> &counts,
                   const std::string &marker = bpe::kMarker);

std::map<std::string, std::uint64_t>
count_tokens_serial(const std::vector<std::vector<std::string>> &lines);

std::vector<std::vector<std::string>> segment_corpus_serial(const bpe::MergeTable &table,
                                                            std::span<const WordSequence> lines);

// Straight-line IBM-Model-1 EM over string tokens. Returns the lexicon as an
// ordered map plus the per-round log-likelihood, for comparison against the
// library's block-parallel trainer.
struct Ibm1Reference {
  std::map<std::pair<std::string, std::string>, double> lexicon; // (src, trg) -> p(trg|src)
  std::vector<double> log_likelihood;
};
Ibm1Reference train_ibm1_serial(std::span<const std::vector<std::string>> source_lines,
                                std::span<const std::vector<std::string>> target_lines,
                                int em_iterations);

// Serial corpus BLEU.
eval::BleuReport corpus_bleu_serial(std::span<const WordSequence> hypotheses,
                                    std::span<const WordSequence> references);

} // namespace selfvocab::ref
