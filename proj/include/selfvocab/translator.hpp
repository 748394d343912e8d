#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "selfvocab/corpus.hpp"

namespace selfvocab::translator {

// Count-based lexical translation model: an IBM-Model-1-style lexicon trained
// with EM, a target bigram language model with add-alpha smoothing, and a
// length ratio for greedy monotone decoding. Immutable once trained; safe to
// share across threads.
class LexiconModel {
public:
  bool trained() const { return trained_; }

  // p(target subword | source subword); 0 when the pair never co-occurred.
  double translation_prob(const std::string &source, const std::string &target) const;

  // p(target | previous target) under add-alpha smoothing; prev = "" denotes
  // the line start. Sums to 1 over observed targets plus one unknown bucket.
  double bigram_prob(const std::string &prev, const std::string &target) const;

  double length_ratio() const { return length_ratio_; }
  double alpha() const { return alpha_; }
  std::uint64_t seed() const { return seed_; }
  const std::string &fallback_token() const;
  std::size_t target_type_count() const { return trg_types_.size(); }
  std::size_t source_type_count() const { return src_types_.size(); }

  // Training-data log-likelihood per EM round, evaluated before each M-step.
  const std::vector<double> &log_likelihood_history() const { return ll_history_; }

private:
  friend LexiconModel train_toy(std::span<const std::vector<std::string>>,
                                std::span<const std::vector<std::string>>, int, double,
                                std::uint64_t);
  friend std::vector<std::string> translate(const LexiconModel &,
                                            std::span<const std::string>);

  std::vector<std::string> src_types_;
  std::vector<std::string> trg_types_;
  std::unordered_map<std::string, std::uint32_t> src_ids_;
  std::unordered_map<std::string, std::uint32_t> trg_ids_;

  // Per source id: candidates sorted by target string byte order; probs sum to 1.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> translation_;

  // Bigram counts; context 0 is the line start, context i+1 is target type i.
  std::unordered_map<std::uint64_t, std::uint64_t> bigram_counts_;
  std::vector<std::uint64_t> context_totals_;

  double alpha_ = 0.1;
  double length_ratio_ = 1.0;
  std::uint64_t seed_ = 0;
  std::uint32_t fallback_ = 0;
  std::vector<double> ll_history_;
  bool trained_ = false;
};

// Trains the model on aligned segmented lines with exactly em_iterations EM
// rounds. Deterministic: the uniform co-occurrence initialization and byte-
// order tie-breaking leave the seed with no numeric effect; it is recorded in
// the model. Throws EmptyInputError on an empty corpus, AlignmentError on
// unequal line counts and DomainError on em_iterations < 1.
LexiconModel train_toy(std::span<const std::vector<std::string>> source_lines,
                       std::span<const std::vector<std::string>> target_lines, int em_iterations,
                       double alpha, std::uint64_t seed);

// Greedy monotone decoding. Target length is round(length_ratio * source
// length) clamped to [1, 2 * source length]; each position takes the argmax
// of translation prob times bigram prob over the aligned source token's
// candidates, falling back to the globally most frequent target token.
std::vector<std::string> translate(const LexiconModel &model,
                                   std::span<const std::string> source_line);

// Batch translation, parallel across lines with deterministic output.
std::vector<std::vector<std::string>> translate_lines(
    const LexiconModel &model, std::span<const std::vector<std::string>> source_lines);

// Pairs each detokenized source line with its detokenized translation.
ParallelCorpus generate_pseudo(const LexiconModel &model,
                               std::span<const std::vector<std::string>> source_lines);

// Writes sources one line per sentence to sources_path, substitutes {in} and
// {out} in the command template with absolute paths, runs the command, and
// reads back exactly one hypothesis line per source. Throws SubprocessError
// (with captured command output) on a nonzero exit and AlignmentError on a
// line-count mismatch.
std::vector<std::vector<std::string>> external_translate(
    const std::string &command_template, const std::string &sources_path,
    const std::string &output_path, std::span<const std::vector<std::string>> source_lines);

} // namespace selfvocab::translator
