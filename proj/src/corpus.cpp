#include "selfvocab/corpus.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "selfvocab/errors.hpp"
#include "selfvocab/parallel.hpp"
#include "selfvocab/utf8.hpp"

namespace selfvocab {

namespace {

bool is_space_cp(std::int32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\r' || cp == '\n' || cp == '\v' || cp == '\f' ||
         cp == 0x00A0;
}

bool is_punct_cp(std::int32_t cp) {
  if (cp < 0x80) {
    return (cp >= '!' && cp <= '/') || (cp >= ':' && cp <= '@') || (cp >= '[' && cp <= '`') ||
           (cp >= '{' && cp <= '~');
  }
  // Latin-1 punctuation/symbols and the general punctuation block
  return (cp >= 0x00A1 && cp <= 0x00BF) || (cp >= 0x2010 && cp <= 0x205E);
}

std::vector<std::string> read_lines(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

} // namespace

const char *split_name(Split s) {
  switch (s) {
  case Split::train: return "train";
  case Split::dev: return "dev";
  case Split::test: return "test";
  }
  return "train";
}

WordSequence pretokenize(const std::string &line) {
  WordSequence words;
  std::string cur;
  bool cur_is_word = false;

  auto flush = [&] {
    if (!cur.empty()) words.push_back(cur);
    cur.clear();
  };

  std::size_t i = 0;
  while (i < line.size()) {
    const std::size_t start = i;
    std::int32_t cp = utf8::decode_one(line, i);
    if (cp < 0) {
      // malformed byte: keep it as an opaque word character
      if (!cur_is_word) flush();
      cur_is_word = true;
      cur.append(line.substr(start, i - start));
      continue;
    }
    cp = utf8::lower(cp);
    if (is_space_cp(cp)) {
      flush();
      cur_is_word = false;
    } else if (is_punct_cp(cp)) {
      flush();
      utf8::append(cur, cp);
      flush(); // each punctuation character is its own token
      cur_is_word = false;
    } else {
      if (!cur_is_word) flush();
      cur_is_word = true;
      utf8::append(cur, cp);
    }
  }
  flush();
  return words;
}

LoadResult load_parallel(const std::string &source_path, const std::string &target_path,
                         const std::string &name, Split split) {
  const auto src_lines = read_lines(source_path);
  const auto trg_lines = read_lines(target_path);
  if (src_lines.size() != trg_lines.size()) {
    throw AlignmentError("line count mismatch: " + source_path + " has " +
                         std::to_string(src_lines.size()) + " lines, " + target_path + " has " +
                         std::to_string(trg_lines.size()));
  }
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    if (!utf8::valid(src_lines[i]))
      throw DecodeError("invalid UTF-8 in " + source_path + " at line " + std::to_string(i + 1));
    if (!utf8::valid(trg_lines[i]))
      throw DecodeError("invalid UTF-8 in " + target_path + " at line " + std::to_string(i + 1));
  }

  LoadResult result;
  result.corpus.name = name;
  result.corpus.split = split;
  result.corpus.pairs.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    if (pretokenize(src_lines[i]).empty() || pretokenize(trg_lines[i]).empty()) {
      ++result.dropped_pairs;
      continue;
    }
    result.corpus.pairs.push_back({src_lines[i], trg_lines[i]});
  }
  return result;
}

void save_parallel(const ParallelCorpus &corpus, const std::string &source_path,
                   const std::string &target_path) {
  std::ofstream src(source_path, std::ios::binary);
  std::ofstream trg(target_path, std::ios::binary);
  if (!src) throw IoError("cannot write " + source_path);
  if (!trg) throw IoError("cannot write " + target_path);
  for (const auto &pair : corpus.pairs) {
    src << pair.source << '\n';
    trg << pair.target << '\n';
  }
}

std::vector<WordSequence> pretokenize_sources(const ParallelCorpus &corpus) {
  std::vector<WordSequence> out(corpus.pairs.size());
  par::for_each_index(corpus.pairs.size(),
                      [&](std::size_t i) { out[i] = pretokenize(corpus.pairs[i].source); });
  return out;
}

std::vector<WordSequence> pretokenize_targets(const ParallelCorpus &corpus) {
  std::vector<WordSequence> out(corpus.pairs.size());
  par::for_each_index(corpus.pairs.size(),
                      [&](std::size_t i) { out[i] = pretokenize(corpus.pairs[i].target); });
  return out;
}

SplitResult split_corpus(const ParallelCorpus &corpus, double dev_fraction, double test_fraction,
                         std::uint64_t seed) {
  if (dev_fraction <= 0 || test_fraction <= 0 || dev_fraction + test_fraction >= 1.0)
    throw DomainError("split fractions must be positive and sum to less than 1");

  const std::size_t n = corpus.pairs.size();
  const auto dev_n = static_cast<std::size_t>(std::llround(dev_fraction * static_cast<double>(n)));
  const auto test_n =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (dev_n < 1 || test_n < 1 || dev_n + test_n >= n) {
    throw SizingError("corpus of " + std::to_string(n) +
                      " pairs cannot give every split at least one pair");
  }

  // Fisher-Yates with an explicit modulo draw: std::shuffle is not guaranteed
  // to produce the same permutation across standard libraries.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }

  SplitResult result;
  result.train.name = corpus.name;
  result.dev.name = corpus.name;
  result.test.name = corpus.name;
  result.train.split = Split::train;
  result.dev.split = Split::dev;
  result.test.split = Split::test;
  for (std::size_t i = 0; i < n; ++i) {
    const auto &pair = corpus.pairs[order[i]];
    if (i < dev_n) {
      result.dev.pairs.push_back(pair);
    } else if (i < dev_n + test_n) {
      result.test.pairs.push_back(pair);
    } else {
      result.train.pairs.push_back(pair);
    }
  }
  return result;
}

} // namespace selfvocab
