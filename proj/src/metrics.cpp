#include "selfvocab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "selfvocab/errors.hpp"
#include "selfvocab/utf8.hpp"

namespace selfvocab::metrics {

std::size_t token_char_length(const std::string &token) {
  std::size_t chars = 0;
  std::size_t i = 0;
  while (i < token.size()) {
    if (token.compare(i, bpe::kMarker.size(), bpe::kMarker) == 0) {
      ++chars;
      i += bpe::kMarker.size();
      continue;
    }
    utf8::decode_one(token, i);
    ++chars;
  }
  return chars;
}

VocabMetrics corpus_entropy(const bpe::Vocabulary &vocab) {
  if (vocab.counts.empty()) throw EmptyInputError("entropy of an empty corpus is undefined");

  // Sorted accumulation keeps the floating-point sums independent of the
  // vocabulary map's iteration order.
  std::vector<std::pair<std::string, std::uint64_t>> sorted(vocab.counts.begin(),
                                                            vocab.counts.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto &a, const auto &b) { return a.first < b.first; });

  std::uint64_t occurrences = 0;
  std::uint64_t weighted_chars = 0;
  for (const auto &[token, count] : sorted) {
    occurrences += count;
    weighted_chars += count * token_char_length(token);
  }

  VocabMetrics out;
  out.token_occurrences = occurrences;
  out.vocab_size = vocab.size();
  out.avg_token_length =
      static_cast<double>(weighted_chars) / static_cast<double>(occurrences);
  out.ttr_scaled = 1000.0 * static_cast<double>(out.vocab_size) / static_cast<double>(occurrences);

  double sum = 0.0;
  for (const auto &[token, count] : sorted) {
    const double p = static_cast<double>(count) / static_cast<double>(occurrences);
    sum -= p * std::log2(p);
  }
  out.entropy = sum / out.avg_token_length + 0.0; // normalize -0.0
  return out;
}

VocabMetrics corpus_entropy(const bpe::SegmentedCorpus &segmented) {
  return corpus_entropy(bpe::realized_vocabulary(segmented));
}

double vocab_shift(double entropy_next, double entropy_curr, std::size_t vocab_size_curr) {
  if (vocab_size_curr == 0) throw DomainError("vocabulary shift needs a non-empty vocabulary");
  return -(entropy_next - entropy_curr) / static_cast<double>(vocab_size_curr) + 0.0;
}

double overlap_percent(const bpe::Vocabulary &v_new, const bpe::Vocabulary &v_ref) {
  if (v_ref.counts.empty()) throw DomainError("overlap against an empty reference vocabulary");
  std::size_t shared = 0;
  for (const auto &[token, count] : v_ref.counts) {
    if (v_new.contains(token)) ++shared;
  }
  return 100.0 * static_cast<double>(shared) / static_cast<double>(v_ref.size());
}

double type_token_ratio(const bpe::SegmentedCorpus &segmented) {
  const auto vocab = bpe::realized_vocabulary(segmented);
  if (vocab.counts.empty()) throw EmptyInputError("type-token ratio of an empty corpus");
  return 1000.0 * static_cast<double>(vocab.size()) /
         static_cast<double>(vocab.total_occurrences());
}

double vocab_compression(const bpe::Vocabulary &inference_vocab,
                         const bpe::Vocabulary &test_vocab) {
  if (test_vocab.counts.empty()) throw DomainError("vocabulary compression against an empty set");
  return static_cast<double>(inference_vocab.size()) / static_cast<double>(test_vocab.size());
}

} // namespace selfvocab::metrics
