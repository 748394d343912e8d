// Benchmark comparing the OpenMP kernels against the serial reference
// implementations: adjacent-pair counting, corpus segmentation, EM training
// and corpus BLEU. --check additionally verifies both paths agree.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "reference.hpp"
#include "selfvocab/bpe.hpp"
#include "selfvocab/eval.hpp"
#include "selfvocab/parallel.hpp"
#include "selfvocab/translator.hpp"

using namespace selfvocab;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string random_word(std::mt19937_64 &rng, int min_len, int max_len) {
  const int len = min_len + static_cast<int>(rng() % (max_len - min_len + 1));
  std::string word;
  for (int i = 0; i < len; ++i) word.push_back(static_cast<char>('a' + rng() % 16));
  return word;
}

struct Fixture {
  bpe::WordCounts words;
  std::vector<WordSequence> lines;
  std::vector<std::vector<std::string>> src_lines;
  std::vector<std::vector<std::string>> trg_lines;
  bpe::MergeTable table;
};

Fixture make_fixture(std::size_t n_lines) {
  std::mt19937_64 rng(20240917);
  Fixture fx;

  std::vector<std::string> lexicon;
  for (int i = 0; i < 400; ++i) lexicon.push_back(random_word(rng, 3, 9));

  fx.lines.resize(n_lines);
  for (auto &line : fx.lines) {
    const std::size_t len = 6 + rng() % 10;
    for (std::size_t k = 0; k < len; ++k) line.push_back(lexicon[rng() % lexicon.size()]);
  }
  fx.words.add_lines(fx.lines);
  fx.table = bpe::learn_bpe(fx.words, 300);

  const auto segmented = bpe::segment_corpus(fx.table, fx.lines);
  fx.src_lines = segmented.lines;
  fx.trg_lines = segmented.lines; // copy task is enough to exercise EM
  return fx;
}

void report(const char *name, double serial_s, double parallel_s) {
  std::printf("%-22s serial %8.4fs   parallel %8.4fs   speedup %.2fx\n", name, serial_s,
              parallel_s, parallel_s > 0 ? serial_s / parallel_s : 0.0);
}

} // namespace

int main(int argc, char **argv) {
  std::size_t n_lines = 20000;
  bool check = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--check") {
      check = true;
    } else if (arg == "--n" && i + 1 < argc) {
      n_lines = std::stoul(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: selfvocab-bench [--n lines] [--check]\n");
      return 2;
    }
  }

  std::printf("lines=%zu threads=%d\n", n_lines, par::thread_count());
  const Fixture fx = make_fixture(n_lines);

  // pair counting
  {
    std::vector<std::vector<std::uint32_t>> ids;
    std::vector<std::string> id_strings;
    std::unordered_map<std::string, std::uint32_t> intern;
    ids.reserve(fx.words.words.size());
    for (const auto &word : fx.words.words) {
      std::vector<std::uint32_t> symbols;
      std::string marker_word = word;
      for (char c : word) {
        std::string s(1, c);
        auto [it, added] = intern.emplace(s, id_strings.size());
        if (added) id_strings.push_back(s);
        symbols.push_back(it->second);
      }
      ids.push_back(std::move(symbols));
    }

    auto start = std::chrono::steady_clock::now();
    const auto serial = ref::count_pairs_serial(fx.words.words, fx.words.counts);
    const double serial_s = seconds_since(start);

    start = std::chrono::steady_clock::now();
    const auto parallel = bpe::count_adjacent_pairs(ids, fx.words.counts);
    const double parallel_s = seconds_since(start);
    report("pair-counting", serial_s, parallel_s);
    if (check && parallel.empty() != serial.empty()) {
      std::fprintf(stderr, "pair-counting check failed\n");
      return 1;
    }
  }

  // segmentation
  {
    auto start = std::chrono::steady_clock::now();
    const auto serial = ref::segment_corpus_serial(fx.table, fx.lines);
    const double serial_s = seconds_since(start);

    start = std::chrono::steady_clock::now();
    const auto parallel = bpe::segment_corpus(fx.table, fx.lines);
    const double parallel_s = seconds_since(start);
    report("segmentation", serial_s, parallel_s);
    if (check && parallel.lines != serial) {
      std::fprintf(stderr, "segmentation check failed\n");
      return 1;
    }
  }

  // EM training
  {
    const std::size_t n = std::min<std::size_t>(fx.src_lines.size(), 4000);
    std::vector<std::vector<std::string>> src(fx.src_lines.begin(), fx.src_lines.begin() + n);
    std::vector<std::vector<std::string>> trg(fx.trg_lines.begin(), fx.trg_lines.begin() + n);

    auto start = std::chrono::steady_clock::now();
    const auto serial = ref::train_ibm1_serial(src, trg, 3);
    const double serial_s = seconds_since(start);

    start = std::chrono::steady_clock::now();
    const auto model = translator::train_toy(src, trg, 3, 0.1, 1);
    const double parallel_s = seconds_since(start);
    report("em-training", serial_s, parallel_s);
    if (check) {
      for (const auto &[pair, prob] : serial.lexicon) {
        const double got = model.translation_prob(pair.first, pair.second);
        if (std::abs(got - prob) > 1e-9) {
          std::fprintf(stderr, "em check failed at (%s,%s): %f vs %f\n", pair.first.c_str(),
                       pair.second.c_str(), got, prob);
          return 1;
        }
      }
    }
  }

  // BLEU
  {
    std::vector<WordSequence> hyp(fx.lines.begin(), fx.lines.end());
    auto start = std::chrono::steady_clock::now();
    const auto serial = ref::corpus_bleu_serial(hyp, hyp);
    const double serial_s = seconds_since(start);

    start = std::chrono::steady_clock::now();
    const auto parallel = eval::corpus_bleu(hyp, hyp);
    const double parallel_s = seconds_since(start);
    report("bleu", serial_s, parallel_s);
    if (check && (parallel.score != serial.score || parallel.score != 100.0)) {
      std::fprintf(stderr, "bleu check failed\n");
      return 1;
    }
  }

  if (check) std::printf("all checks passed\n");
  return 0;
}
