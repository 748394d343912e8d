#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "selfvocab/corpus.hpp"

namespace selfvocab::bpe {

// Reserved end-of-word marker. It enters BPE learning as a separate final
// symbol and is rendered fused onto the last subword of each word.
inline const std::string kMarker = "</w>";

struct MergeRule {
  std::string left;
  std::string right;
  std::uint32_t rank = 0;

  bool operator==(const MergeRule &) const = default;
};

// Ordered BPE merge rules, ascending rank. rules.size() <= target_merges;
// learning stops early once no adjacent pair occurs at least twice.
struct MergeTable {
  std::vector<MergeRule> rules;
  std::string marker = kMarker;
  std::size_t target_merges = 0;

  // Content hash identifying the table (varies with rules and marker).
  std::string id() const;

  bool operator==(const MergeTable &) const = default;
};

// Token types realized in a segmented corpus, with occurrence counts.
struct Vocabulary {
  std::unordered_map<std::string, std::uint64_t> counts;

  std::size_t size() const { return counts.size(); }
  bool contains(const std::string &token) const { return counts.count(token) != 0; }
  std::uint64_t total_occurrences() const;
};

// A corpus rendered as subword-token lines under one merge table.
struct SegmentedCorpus {
  std::vector<std::vector<std::string>> lines;
  std::string table_id;
};

// Distinct words with multiplicities, in first-occurrence order. This is the
// unit BPE learning consumes; order is deterministic for a given input.
struct WordCounts {
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;

  void add(const WordSequence &line);
  void add_lines(std::span<const WordSequence> lines);
  bool empty() const { return words.empty(); }

private:
  std::unordered_map<std::string, std::size_t> index_;
};

// Learns up to target_merges merge rules. Each step counts all adjacent
// symbol pairs weighted by word frequency, merges the most frequent pair
// (ties: lexicographically smallest left, then right, by byte order) and
// stops early when the best pair occurs fewer than two times. Pair counting
// runs in parallel; the result is independent of the thread count.
MergeTable learn_bpe(const WordCounts &words, std::size_t target_merges);
MergeTable learn_bpe(std::span<const std::vector<WordSequence>> sides, std::size_t target_merges);

// Splits a word into character symbols plus the marker, then applies table
// rules strictly in ascending rank order. The word must be non-empty and must
// not contain the marker substring.
std::vector<std::string> segment_word(const MergeTable &table, const std::string &word);

// Line-wise segmentation, order preserved. Parallel across lines.
SegmentedCorpus segment_corpus(const MergeTable &table, std::span<const WordSequence> lines);

// Distinct subword types and occurrence totals over the segmented lines.
Vocabulary realized_vocabulary(const SegmentedCorpus &segmented);

// Exact inverse of segmentation: concatenates subwords and ends a word at
// each marker. Throws MalformedSegmentError on an interior marker.
WordSequence detokenize(std::span<const std::string> line);

// Adjacent-pair counting over symbol-id words, weighted by multiplicity.
// Exposed so tests and the benchmark can compare against the serial
// reference; the returned map is identical for any thread count.
struct PairHash {
  std::size_t operator()(const std::pair<std::uint32_t, std::uint32_t> &p) const {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(p.first) << 32) | p.second);
  }
};
using PairCountMap =
    std::unordered_map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t, PairHash>;
PairCountMap count_adjacent_pairs(const std::vector<std::vector<std::uint32_t>> &words,
                                  const std::vector<std::uint64_t> &multiplicities);

// Merge-table file: header "#selfvocab-bpe v1 marker=</w>", then one
// "left right" rule per line in rank order.
void save_merge_table(const MergeTable &table, const std::string &path);
MergeTable load_merge_table(const std::string &path);

// Vocabulary file: "token<TAB>count" per line, descending count then byte order.
void save_vocabulary(const Vocabulary &vocab, const std::string &path);
Vocabulary load_vocabulary(const std::string &path);

} // namespace selfvocab::bpe
