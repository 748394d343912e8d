#include "selfvocab/bpe.hpp"

#include <algorithm>
#include <fstream>

#include "selfvocab/errors.hpp"
#include "selfvocab/parallel.hpp"
#include "selfvocab/utf8.hpp"

namespace selfvocab::bpe {

namespace {

constexpr std::uint32_t kNoSymbol = 0xFFFFFFFFu;

// Interned symbol strings. Ids are assigned in first-use order, which is a
// pure function of the input corpus, so everything downstream that breaks
// ties by symbol *string* stays deterministic.
struct SymbolTable {
  std::vector<std::string> strings;
  std::unordered_map<std::string, std::uint32_t> ids;

  std::uint32_t intern(const std::string &s) {
    auto it = ids.find(s);
    if (it != ids.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(strings.size());
    strings.push_back(s);
    ids.emplace(s, id);
    return id;
  }
};

std::vector<std::string> word_to_symbols(const std::string &word, const std::string &marker) {
  std::vector<std::string> symbols;
  std::size_t i = 0;
  while (i < word.size()) {
    const std::size_t start = i;
    utf8::decode_one(word, i);
    symbols.push_back(word.substr(start, i - start));
  }
  symbols.push_back(marker);
  return symbols;
}

// Fuses the trailing marker symbol onto the final subword for rendering.
std::vector<std::string> render_symbols(std::vector<std::string> symbols,
                                        const std::string &marker) {
  if (symbols.size() >= 2 && symbols.back() == marker) {
    std::string last = std::move(symbols[symbols.size() - 2]);
    last += marker;
    symbols.pop_back();
    symbols.back() = std::move(last);
  }
  return symbols;
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

} // namespace

std::string MergeTable::id() const {
  std::uint64_t h = fnv1a(marker);
  for (const auto &rule : rules) {
    h = fnv1a(rule.left, h);
    h = fnv1a("\x1f", h);
    h = fnv1a(rule.right, h);
    h = fnv1a("\n", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t Vocabulary::total_occurrences() const {
  std::uint64_t total = 0;
  for (const auto &[token, count] : counts) total += count;
  return total;
}

void WordCounts::add(const WordSequence &line) {
  for (const auto &word : line) {
    auto it = index_.find(word);
    if (it == index_.end()) {
      index_.emplace(word, words.size());
      words.push_back(word);
      counts.push_back(1);
    } else {
      ++counts[it->second];
    }
  }
}

void WordCounts::add_lines(std::span<const WordSequence> lines) {
  for (const auto &line : lines) add(line);
}

PairCountMap count_adjacent_pairs(const std::vector<std::vector<std::uint32_t>> &words,
                                  const std::vector<std::uint64_t> &multiplicities) {
  const std::size_t nblocks = par::block_count(words.size());
  std::vector<PairCountMap> partials(nblocks);
  par::for_each_block(words.size(), [&](std::size_t bi, std::size_t begin, std::size_t end) {
    auto &local = partials[bi];
    for (std::size_t wi = begin; wi < end; ++wi) {
      const auto &word = words[wi];
      const std::uint64_t mult = multiplicities[wi];
      for (std::size_t k = 0; k + 1 < word.size(); ++k) {
        local[{word[k], word[k + 1]}] += mult;
      }
    }
  });

  PairCountMap merged;
  for (auto &partial : partials) {
    for (const auto &[pair, count] : partial) merged[pair] += count;
  }
  return merged;
}

MergeTable learn_bpe(const WordCounts &input, std::size_t target_merges) {
  if (input.empty()) throw EmptyInputError("BPE learning needs a non-empty corpus");

  MergeTable table;
  table.target_merges = target_merges;

  SymbolTable symbols;
  std::vector<std::vector<std::uint32_t>> words(input.words.size());
  for (std::size_t wi = 0; wi < input.words.size(); ++wi) {
    for (const auto &sym : word_to_symbols(input.words[wi], table.marker)) {
      words[wi].push_back(symbols.intern(sym));
    }
  }

  for (std::size_t step = 0; step < target_merges; ++step) {
    const PairCountMap counts = count_adjacent_pairs(words, input.counts);

    // Best pair: highest count, then smallest (left, right) by byte order.
    // The scan keeps a running winner, so map iteration order is irrelevant.
    bool found = false;
    std::pair<std::uint32_t, std::uint32_t> best{};
    std::uint64_t best_count = 0;
    for (const auto &[pair, count] : counts) {
      if (count < 2) continue;
      if (!found || count > best_count) {
        found = true;
        best = pair;
        best_count = count;
        continue;
      }
      if (count == best_count) {
        const auto &bl = symbols.strings[best.first];
        const auto &br = symbols.strings[best.second];
        const auto &cl = symbols.strings[pair.first];
        const auto &cr = symbols.strings[pair.second];
        if (cl < bl || (cl == bl && cr < br)) best = pair;
      }
    }
    if (!found) break; // no pair occurs at least twice

    const std::string &left = symbols.strings[best.first];
    const std::string &right = symbols.strings[best.second];
    table.rules.push_back({left, right, static_cast<std::uint32_t>(step)});
    const std::uint32_t fused = symbols.intern(left + right);

    par::for_each_index(words.size(), [&](std::size_t wi) {
      auto &word = words[wi];
      std::size_t out = 0;
      for (std::size_t k = 0; k < word.size();) {
        if (k + 1 < word.size() && word[k] == best.first && word[k + 1] == best.second) {
          word[out++] = fused;
          k += 2;
        } else {
          word[out++] = word[k++];
        }
      }
      word.resize(out);
    });
  }
  return table;
}

MergeTable learn_bpe(std::span<const std::vector<WordSequence>> sides,
                     std::size_t target_merges) {
  WordCounts words;
  for (const auto &side : sides) words.add_lines(side);
  return learn_bpe(words, target_merges);
}

std::vector<std::string> segment_word(const MergeTable &table, const std::string &word) {
  if (word.empty()) throw EmptyInputError("cannot segment an empty word");
  if (word.find(table.marker) != std::string::npos)
    throw MalformedSegmentError("word contains the reserved marker: " + word);

  std::vector<std::string> symbols = word_to_symbols(word, table.marker);

  std::unordered_map<std::string, std::uint32_t> rank;
  rank.reserve(table.rules.size());
  for (const auto &rule : table.rules) rank.emplace(rule.left + '\x1f' + rule.right, rule.rank);

  // Repeatedly merge all occurrences of the lowest-ranked applicable pair.
  while (symbols.size() > 1) {
    std::uint32_t best_rank = kNoSymbol;
    for (std::size_t k = 0; k + 1 < symbols.size(); ++k) {
      auto it = rank.find(symbols[k] + '\x1f' + symbols[k + 1]);
      if (it != rank.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == kNoSymbol) break;
    const MergeRule &rule = table.rules[best_rank];
    std::vector<std::string> next;
    next.reserve(symbols.size());
    for (std::size_t k = 0; k < symbols.size();) {
      if (k + 1 < symbols.size() && symbols[k] == rule.left && symbols[k + 1] == rule.right) {
        next.push_back(symbols[k] + symbols[k + 1]);
        k += 2;
      } else {
        next.push_back(std::move(symbols[k]));
        ++k;
      }
    }
    symbols = std::move(next);
  }
  return render_symbols(std::move(symbols), table.marker);
}

SegmentedCorpus segment_corpus(const MergeTable &table, std::span<const WordSequence> lines) {
  SegmentedCorpus out;
  out.table_id = table.id();
  out.lines.resize(lines.size());

  // Per-word results are cached: corpora repeat words heavily and the cache
  // keeps the parallel path cheap. The cache is filled serially over the
  // distinct-word list so the output cannot depend on thread interleaving.
  WordCounts distinct;
  distinct.add_lines(lines);
  std::unordered_map<std::string, std::vector<std::string>> cache;
  cache.reserve(distinct.words.size());
  std::vector<std::vector<std::string>> segmented(distinct.words.size());
  par::for_each_index(distinct.words.size(), [&](std::size_t wi) {
    segmented[wi] = segment_word(table, distinct.words[wi]);
  });
  for (std::size_t wi = 0; wi < distinct.words.size(); ++wi) {
    cache.emplace(distinct.words[wi], std::move(segmented[wi]));
  }

  par::for_each_index(lines.size(), [&](std::size_t li) {
    auto &out_line = out.lines[li];
    for (const auto &word : lines[li]) {
      const auto &pieces = cache.at(word);
      out_line.insert(out_line.end(), pieces.begin(), pieces.end());
    }
  });
  return out;
}

Vocabulary realized_vocabulary(const SegmentedCorpus &segmented) {
  const std::size_t nblocks = par::block_count(segmented.lines.size());
  std::vector<std::unordered_map<std::string, std::uint64_t>> partials(nblocks);
  par::for_each_block(segmented.lines.size(),
                      [&](std::size_t bi, std::size_t begin, std::size_t end) {
                        auto &local = partials[bi];
                        for (std::size_t li = begin; li < end; ++li) {
                          for (const auto &token : segmented.lines[li]) ++local[token];
                        }
                      });
  Vocabulary vocab;
  for (auto &partial : partials) {
    for (const auto &[token, count] : partial) vocab.counts[token] += count;
  }
  return vocab;
}

WordSequence detokenize(std::span<const std::string> line) {
  WordSequence words;
  std::string current;
  for (const auto &token : line) {
    const std::size_t pos = token.find(kMarker);
    if (pos == std::string::npos) {
      current += token;
      continue;
    }
    if (pos + kMarker.size() != token.size()) {
      throw MalformedSegmentError("interior end-of-word marker in token: " + token);
    }
    current += token.substr(0, pos);
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

void save_merge_table(const MergeTable &table, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "#selfvocab-bpe v1 marker=" << table.marker << '\n';
  for (const auto &rule : table.rules) out << rule.left << ' ' << rule.right << '\n';
}

MergeTable load_merge_table(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw FormatError(path + ": empty merge-table file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const std::string prefix = "#selfvocab-bpe v1 marker=";
  if (header.rfind(prefix, 0) != 0)
    throw FormatError(path + ": bad merge-table header: " + header);

  MergeTable table;
  table.marker = header.substr(prefix.size());
  if (table.marker.empty()) throw FormatError(path + ": empty marker in header");

  std::string line;
  std::uint32_t rank = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t space = line.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 == line.size() ||
        line.find(' ', space + 1) != std::string::npos) {
      throw FormatError(path + ": malformed rule at line " + std::to_string(lineno));
    }
    table.rules.push_back({line.substr(0, space), line.substr(space + 1), rank++});
  }
  table.target_merges = table.rules.size();
  return table;
}

void save_vocabulary(const Vocabulary &vocab, const std::string &path) {
  std::vector<std::pair<std::string, std::uint64_t>> sorted(vocab.counts.begin(),
                                                            vocab.counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto &a, const auto &b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto &[token, count] : sorted) out << token << '\t' << count << '\n';
}

Vocabulary load_vocabulary(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  Vocabulary vocab;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw FormatError(path + ": malformed vocabulary line " + std::to_string(lineno));
    const std::string token = line.substr(0, tab);
    char *end = nullptr;
    const auto count = std::strtoull(line.c_str() + tab + 1, &end, 10);
    if (end == line.c_str() + tab + 1 || count == 0)
      throw FormatError(path + ": bad count at line " + std::to_string(lineno));
    vocab.counts[token] = count;
  }
  return vocab;
}

} // namespace selfvocab::bpe
