#include "reference.hpp"

#include <algorithm>
#include <cmath>

#include "selfvocab/utf8.hpp"

namespace selfvocab::ref {

namespace {

std::vector<std::string> to_symbols(const std::string &word, const std::string &marker) {
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

void merge_in_place(std::vector<std::string> &symbols, const std::string &left,
                    const std::string &right) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t k = 0; k < symbols.size();) {
    if (k + 1 < symbols.size() && symbols[k] == left && symbols[k + 1] == right) {
      out.push_back(left + right);
      k += 2;
    } else {
      out.push_back(symbols[k]);
      ++k;
    }
  }
  symbols = std::move(out);
}

} // namespace

std::vector<bpe::MergeRule> learn_bpe_bruteforce(const std::vector<std::string> &words,
                                                 const std::vector<std::uint64_t> &counts,
                                                 std::size_t target_merges,
                                                 const std::string &marker) {
  std::vector<std::vector<std::string>> symbol_words;
  symbol_words.reserve(words.size());
  for (const auto &word : words) symbol_words.push_back(to_symbols(word, marker));

  std::vector<bpe::MergeRule> rules;
  for (std::size_t step = 0; step < target_merges; ++step) {
    std::map<std::pair<std::string, std::string>, std::uint64_t> pair_counts;
    for (std::size_t wi = 0; wi < symbol_words.size(); ++wi) {
      const auto &symbols = symbol_words[wi];
      for (std::size_t k = 0; k + 1 < symbols.size(); ++k) {
        pair_counts[{symbols[k], symbols[k + 1]}] += counts[wi];
      }
    }

    std::pair<std::string, std::string> best;
    std::uint64_t best_count = 0;
    for (const auto &[pair, count] : pair_counts) {
      // std::map iterates in ascending key order, so on equal counts the
      // first (smallest) pair seen wins
      if (count > best_count) {
        best = pair;
        best_count = count;
      }
    }
    if (best_count < 2) break;

    rules.push_back({best.first, best.second, static_cast<std::uint32_t>(step)});
    for (auto &symbols : symbol_words) merge_in_place(symbols, best.first, best.second);
  }
  return rules;
}

std::vector<std::string> segment_word_replay(const std::vector<bpe::MergeRule> &rules,
                                             const std::string &word, const std::string &marker) {
  std::vector<std::string> symbols = to_symbols(word, marker);
  while (true) {
    const bpe::MergeRule *applicable = nullptr;
    for (const auto &rule : rules) {
      for (std::size_t k = 0; k + 1 < symbols.size(); ++k) {
        if (symbols[k] == rule.left && symbols[k + 1] == rule.right) {
          applicable = &rule;
          break;
        }
      }
      if (applicable != nullptr) break; // rules are rank-ordered
    }
    if (applicable == nullptr) break;
    merge_in_place(symbols, applicable->left, applicable->right);
  }
  if (symbols.size() >= 2 && symbols.back() == marker) {
    symbols.pop_back();
    symbols.back() += marker;
  }
  return symbols;
}

std::map<std::pair<std::string, std::string>, std::uint64_t>
count_pairs_serial(const std::vector<std::string> &words, const std::vector<std::uint64_t> &counts,
                   const std::string &marker) {
  std::map<std::pair<std::string, std::string>, std::uint64_t> out;
  for (std::size_t wi = 0; wi < words.size(); ++wi) {
    const auto symbols = to_symbols(words[wi], marker);
    for (std::size_t k = 0; k + 1 < symbols.size(); ++k) {
      out[{symbols[k], symbols[k + 1]}] += counts[wi];
    }
  }
  return out;
}

std::map<std::string, std::uint64_t>
count_tokens_serial(const std::vector<std::vector<std::string>> &lines) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto &line : lines) {
    for (const auto &token : line) ++counts[token];
  }
  return counts;
}

std::vector<std::vector<std::string>> segment_corpus_serial(const bpe::MergeTable &table,
                                                            std::span<const WordSequence> lines) {
  std::vector<std::vector<std::string>> out;
  out.reserve(lines.size());
  for (const auto &line : lines) {
    std::vector<std::string> seg;
    for (const auto &word : line) {
      const auto pieces = segment_word_replay(table.rules, word, table.marker);
      seg.insert(seg.end(), pieces.begin(), pieces.end());
    }
    out.push_back(std::move(seg));
  }
  return out;
}

Ibm1Reference train_ibm1_serial(std::span<const std::vector<std::string>> source_lines,
                                std::span<const std::vector<std::string>> target_lines,
                                int em_iterations) {
  Ibm1Reference result;

  // uniform initialization over co-occurring pairs
  std::map<std::string, std::vector<std::string>> candidates;
  for (std::size_t li = 0; li < source_lines.size(); ++li) {
    for (const auto &s : source_lines[li]) {
      auto &list = candidates[s];
      for (const auto &t : target_lines[li]) {
        if (std::find(list.begin(), list.end(), t) == list.end()) list.push_back(t);
      }
    }
  }
  for (auto &[s, list] : candidates) {
    std::sort(list.begin(), list.end());
    for (const auto &t : list) result.lexicon[{s, t}] = 1.0 / static_cast<double>(list.size());
  }

  for (int round = 0; round < em_iterations; ++round) {
    std::map<std::pair<std::string, std::string>, double> expected;
    std::map<std::string, double> totals;
    double ll = 0.0;
    for (std::size_t li = 0; li < source_lines.size(); ++li) {
      for (const auto &t : target_lines[li]) {
        double denom = 0.0;
        for (const auto &s : source_lines[li]) {
          auto it = result.lexicon.find({s, t});
          if (it != result.lexicon.end()) denom += it->second;
        }
        ll += std::log(denom / static_cast<double>(source_lines[li].size()));
        for (const auto &s : source_lines[li]) {
          auto it = result.lexicon.find({s, t});
          if (it == result.lexicon.end()) continue;
          const double gamma = it->second / denom;
          expected[{s, t}] += gamma;
          totals[s] += gamma;
        }
      }
    }
    result.log_likelihood.push_back(ll);
    for (auto &[pair, prob] : result.lexicon) {
      auto it = expected.find(pair);
      prob = it == expected.end() ? 0.0 : it->second / totals[pair.first];
    }
  }
  return result;
}

eval::BleuReport corpus_bleu_serial(std::span<const WordSequence> hypotheses,
                                    std::span<const WordSequence> references) {
  std::uint64_t clipped[4] = {0, 0, 0, 0};
  std::uint64_t total[4] = {0, 0, 0, 0};
  std::uint64_t hyp_len = 0, ref_len = 0;

  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto &hyp = hypotheses[i];
    const auto &ref = references[i];
    hyp_len += hyp.size();
    ref_len += ref.size();
    for (int n = 1; n <= 4; ++n) {
      std::map<std::vector<std::string>, std::uint64_t> hyp_grams, ref_grams;
      for (std::size_t k = 0; k + n <= hyp.size(); ++k) {
        ++hyp_grams[std::vector<std::string>(hyp.begin() + k, hyp.begin() + k + n)];
      }
      for (std::size_t k = 0; k + n <= ref.size(); ++k) {
        ++ref_grams[std::vector<std::string>(ref.begin() + k, ref.begin() + k + n)];
      }
      for (const auto &[gram, count] : hyp_grams) {
        total[n - 1] += count;
        auto it = ref_grams.find(gram);
        if (it != ref_grams.end()) clipped[n - 1] += std::min(count, it->second);
      }
    }
  }

  eval::BleuReport report;
  report.hyp_length = hyp_len;
  report.ref_length = ref_len;
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 0; n < 4; ++n) {
    const double p =
        total[n] == 0 ? 1.0 : static_cast<double>(clipped[n]) / static_cast<double>(total[n]);
    report.precisions[n] = p;
    if (p <= 0) {
      zero = true;
    } else {
      log_sum += std::log(p);
    }
  }
  if (hyp_len == 0) {
    report.brevity_penalty = 1.0;
    report.score = 0.0;
    return report;
  }
  report.brevity_penalty =
      hyp_len < ref_len
          ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len))
          : 1.0;
  report.score = zero ? 0.0 : 100.0 * report.brevity_penalty * std::exp(log_sum / 4.0);
  return report;
}

} // namespace selfvocab::ref
