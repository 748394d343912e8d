#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace selfvocab {

// One aligned source/target line pair. Lines never contain newlines.
struct SentencePair {
  std::string source;
  std::string target;

  bool operator==(const SentencePair &) const = default;
};

enum class Split { train, dev, test };

const char *split_name(Split s);

// Line-aligned parallel text. Order is stable across save/load.
struct ParallelCorpus {
  std::vector<SentencePair> pairs;
  std::string name;
  Split split = Split::train;

  std::size_t size() const { return pairs.size(); }
};

// A pretokenized line: non-empty word tokens without whitespace or the
// end-of-word marker string.
using WordSequence = std::vector<std::string>;

struct LoadResult {
  ParallelCorpus corpus;
  std::size_t dropped_pairs = 0; // pairs with one side empty after pretokenization
};

// Reads two aligned UTF-8 files (one sentence per line, CR stripped) into a
// corpus. Pairs with an empty side after pretokenization are dropped and
// counted. Throws AlignmentError on line-count mismatch and DecodeError with
// a line number on invalid UTF-8.
LoadResult load_parallel(const std::string &source_path, const std::string &target_path,
                         const std::string &name = "", Split split = Split::train);

// Writes the corpus back out as two plain-text files, LF line endings.
void save_parallel(const ParallelCorpus &corpus, const std::string &source_path,
                   const std::string &target_path);

// Lowercases, splits on whitespace runs, and isolates punctuation characters
// as standalone tokens. Deterministic and locale-independent.
WordSequence pretokenize(const std::string &line);

// Pretokenizes every source (or target) line of the corpus.
std::vector<WordSequence> pretokenize_sources(const ParallelCorpus &corpus);
std::vector<WordSequence> pretokenize_targets(const ParallelCorpus &corpus);

struct SplitResult {
  ParallelCorpus train;
  ParallelCorpus dev;
  ParallelCorpus test;
};

// Deterministic seeded shuffle followed by partition. The three outputs are
// disjoint and their union is the input. Throws SizingError when any split
// would be empty.
SplitResult split_corpus(const ParallelCorpus &corpus, double dev_fraction,
                         double test_fraction, std::uint64_t seed);

} // namespace selfvocab
