#include "selfvocab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "selfvocab/errors.hpp"
#include "selfvocab/parallel.hpp"

namespace selfvocab::eval {

namespace {

struct SentenceStats {
  std::array<std::uint64_t, 4> clipped{};
  std::array<std::uint64_t, 4> total{};
  std::uint64_t hyp_length = 0;
  std::uint64_t ref_length = 0;

  void operator+=(const SentenceStats &other) {
    for (int n = 0; n < 4; ++n) {
      clipped[n] += other.clipped[n];
      total[n] += other.total[n];
    }
    hyp_length += other.hyp_length;
    ref_length += other.ref_length;
  }
};

// n-grams keyed as tokens joined with a separator byte
std::unordered_map<std::string, std::uint64_t> ngram_counts(const WordSequence &words, int n) {
  std::unordered_map<std::string, std::uint64_t> counts;
  if (static_cast<int>(words.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::string key = words[i];
    for (int k = 1; k < n; ++k) {
      key += '\x1f';
      key += words[i + k];
    }
    ++counts[key];
  }
  return counts;
}

SentenceStats sentence_stats(const WordSequence &hyp, const WordSequence &ref) {
  SentenceStats stats;
  stats.hyp_length = hyp.size();
  stats.ref_length = ref.size();
  for (int n = 1; n <= 4; ++n) {
    if (static_cast<int>(hyp.size()) < n) break;
    const auto hyp_grams = ngram_counts(hyp, n);
    const auto ref_grams = ngram_counts(ref, n);
    std::uint64_t clipped = 0, total = 0;
    for (const auto &[gram, count] : hyp_grams) {
      total += count;
      auto it = ref_grams.find(gram);
      if (it != ref_grams.end()) clipped += std::min(count, it->second);
    }
    stats.clipped[n - 1] = clipped;
    stats.total[n - 1] = total;
  }
  return stats;
}

} // namespace

BleuReport corpus_bleu(std::span<const WordSequence> hypotheses,
                       std::span<const WordSequence> references, bool add_one_smoothing) {
  if (hypotheses.size() != references.size()) {
    throw AlignmentError("hypothesis/reference count mismatch: " +
                         std::to_string(hypotheses.size()) + " vs " +
                         std::to_string(references.size()));
  }
  if (hypotheses.empty()) throw EmptyInputError("BLEU needs at least one hypothesis");

  // Integer statistics sum block-wise; the result is thread-count independent.
  const std::size_t nblocks = par::block_count(hypotheses.size());
  std::vector<SentenceStats> partials(nblocks);
  par::for_each_block(hypotheses.size(), [&](std::size_t bi, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      partials[bi] += sentence_stats(hypotheses[i], references[i]);
    }
  });
  SentenceStats stats;
  for (const auto &partial : partials) stats += partial;

  BleuReport report;
  report.hyp_length = stats.hyp_length;
  report.ref_length = stats.ref_length;

  double log_sum = 0.0;
  bool zero_precision = false;
  for (int n = 0; n < 4; ++n) {
    std::uint64_t clipped = stats.clipped[n];
    std::uint64_t total = stats.total[n];
    if (add_one_smoothing) {
      clipped += 1;
      total += 1;
    }
    // no n-grams of this order at all (every hypothesis shorter than n):
    // vacuously perfect; the brevity penalty handles short output
    const double p =
        total == 0 ? 1.0 : static_cast<double>(clipped) / static_cast<double>(total);
    report.precisions[n] = p;
    if (p <= 0.0) {
      zero_precision = true;
    } else {
      log_sum += std::log(p);
    }
  }

  if (stats.hyp_length == 0) {
    report.brevity_penalty = 1.0;
    report.score = 0.0;
    return report;
  }
  report.brevity_penalty =
      stats.hyp_length < stats.ref_length
          ? std::exp(1.0 - static_cast<double>(stats.ref_length) /
                               static_cast<double>(stats.hyp_length))
          : 1.0;
  report.score =
      zero_precision ? 0.0 : 100.0 * report.brevity_penalty * std::exp(log_sum / 4.0);
  return report;
}

} // namespace selfvocab::eval
