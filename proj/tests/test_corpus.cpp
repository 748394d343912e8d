#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "selfvocab/corpus.hpp"
#include "selfvocab/errors.hpp"
#include "support/generators.hpp"

using namespace selfvocab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "selfvocab-corpus-test";
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string join(const WordSequence &words) {
  std::string line;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) line += ' ';
    line += words[i];
  }
  return line;
}

} // namespace

TEST_CASE("pretokenize splits punctuation and lowercases") {
  CHECK(pretokenize("Hello, world!") == WordSequence{"hello", ",", "world", "!"});
  CHECK(pretokenize("a  b") == WordSequence{"a", "b"});
  CHECK(pretokenize("don't") == WordSequence{"don", "'", "t"});
  CHECK(pretokenize("").empty());
  CHECK(pretokenize("   ").empty());
  CHECK(pretokenize("ABC123def") == WordSequence{"abc123def"});
  CHECK(pretokenize("x(y)z") == WordSequence{"x", "(", "y", ")", "z"});
}

TEST_CASE("pretokenize handles latin-1 letters") {
  CHECK(pretokenize("Über Äpfel") == WordSequence{"über", "äpfel"});
}

TEST_CASE("pretokenize never emits the marker string") {
  const auto words = pretokenize("weird </w> input</w>here");
  for (const auto &word : words) {
    CHECK(word.find("</w>") == std::string::npos);
  }
}

TEST_CASE("pretokenize is idempotent at the word level") {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 200; ++iter) {
    std::string line;
    const int len = static_cast<int>(rng() % 40);
    for (int i = 0; i < len; ++i) {
      line.push_back(static_cast<char>(' ' + rng() % 95)); // printable ASCII
    }
    const auto once = pretokenize(line);
    const auto twice = pretokenize(join(once));
    CHECK(once == twice);
  }
}

TEST_CASE("load_parallel pairs lines by index") {
  const auto dir = temp_dir();
  write_file(dir / "s.txt", "eins\nzwei\ndrei\n");
  write_file(dir / "t.txt", "one\ntwo\nthree\n");
  const auto loaded = load_parallel((dir / "s.txt").string(), (dir / "t.txt").string());
  REQUIRE(loaded.corpus.size() == 3);
  CHECK(loaded.dropped_pairs == 0);
  CHECK(loaded.corpus.pairs[0] == SentencePair{"eins", "one"});
  CHECK(loaded.corpus.pairs[2] == SentencePair{"drei", "three"});
}

TEST_CASE("load_parallel keeps lines verbatim") {
  const auto dir = temp_dir();
  write_file(dir / "s.txt", "hallo welt\n");
  write_file(dir / "t.txt", "hello world\n");
  const auto loaded = load_parallel((dir / "s.txt").string(), (dir / "t.txt").string());
  CHECK(loaded.corpus.pairs[0].source == "hallo welt");
  CHECK(loaded.corpus.pairs[0].target == "hello world");
}

TEST_CASE("load_parallel rejects misaligned files naming both counts") {
  const auto dir = temp_dir();
  write_file(dir / "s3.txt", "a\nb\nc\n");
  write_file(dir / "t2.txt", "x\ny\n");
  try {
    load_parallel((dir / "s3.txt").string(), (dir / "t2.txt").string());
    FAIL("expected AlignmentError");
  } catch (const AlignmentError &e) {
    const std::string msg = e.what();
    CHECK(msg.find('3') != std::string::npos);
    CHECK(msg.find('2') != std::string::npos);
  }
}

TEST_CASE("load_parallel drops and counts empty-side pairs") {
  const auto dir = temp_dir();
  write_file(dir / "s.txt", "a\n\nc\nd\n");
  write_file(dir / "t.txt", "x\ny\n...\nw\n");
  const auto loaded = load_parallel((dir / "s.txt").string(), (dir / "t.txt").string());
  CHECK(loaded.corpus.size() == 3); // "..." pretokenizes to dots, stays
  CHECK(loaded.dropped_pairs == 1);
}

TEST_CASE("load_parallel reports invalid UTF-8 with a line number") {
  const auto dir = temp_dir();
  write_file(dir / "s.txt", "ok\n\xFF\xFE\n");
  write_file(dir / "t.txt", "x\ny\n");
  try {
    load_parallel((dir / "s.txt").string(), (dir / "t.txt").string());
    FAIL("expected DecodeError");
  } catch (const DecodeError &e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("load_parallel strips CR") {
  const auto dir = temp_dir();
  write_file(dir / "s.txt", "a\r\nb\r\n");
  write_file(dir / "t.txt", "x\ny\n");
  const auto loaded = load_parallel((dir / "s.txt").string(), (dir / "t.txt").string());
  CHECK(loaded.corpus.pairs[0].source == "a");
  CHECK(loaded.corpus.pairs[1].source == "b");
}

TEST_CASE("load save load round-trip is identity") {
  const auto dir = temp_dir();
  write_file(dir / "s.txt", "hallo welt\nwie geht's\ngut , danke\n");
  write_file(dir / "t.txt", "hello world\nhow are you\nfine , thanks\n");
  const auto first = load_parallel((dir / "s.txt").string(), (dir / "t.txt").string());
  save_parallel(first.corpus, (dir / "s2.txt").string(), (dir / "t2.txt").string());
  const auto second = load_parallel((dir / "s2.txt").string(), (dir / "t2.txt").string());
  CHECK(first.corpus.pairs == second.corpus.pairs);
}

TEST_CASE("split_corpus partitions 100 pairs into 80/10/10") {
  ParallelCorpus corpus;
  for (int i = 0; i < 100; ++i) {
    corpus.pairs.push_back({"s" + std::to_string(i), "t" + std::to_string(i)});
  }
  const auto split = split_corpus(corpus, 0.1, 0.1, 7);
  CHECK(split.train.size() == 80);
  CHECK(split.dev.size() == 10);
  CHECK(split.test.size() == 10);
}

TEST_CASE("split_corpus is deterministic under a seed") {
  ParallelCorpus corpus;
  for (int i = 0; i < 57; ++i) {
    corpus.pairs.push_back({"s" + std::to_string(i), "t" + std::to_string(i)});
  }
  const auto a = split_corpus(corpus, 0.2, 0.1, 99);
  const auto b = split_corpus(corpus, 0.2, 0.1, 99);
  CHECK(a.train.pairs == b.train.pairs);
  CHECK(a.dev.pairs == b.dev.pairs);
  CHECK(a.test.pairs == b.test.pairs);
}

TEST_CASE("split_corpus rejects corpora too small for every split") {
  ParallelCorpus corpus;
  corpus.pairs = {{"a", "x"}, {"b", "y"}};
  CHECK_THROWS_AS(split_corpus(corpus, 0.4, 0.4, 1), SizingError);
}

TEST_CASE("split_corpus yields a partition of the input") {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 20; ++iter) {
    ParallelCorpus corpus;
    const int n = 10 + static_cast<int>(rng() % 90);
    for (int i = 0; i < n; ++i) {
      corpus.pairs.push_back({"s" + std::to_string(i), "t" + std::to_string(i)});
    }
    const auto split = split_corpus(corpus, 0.15, 0.15, rng());
    std::vector<SentencePair> all;
    all.insert(all.end(), split.train.pairs.begin(), split.train.pairs.end());
    all.insert(all.end(), split.dev.pairs.begin(), split.dev.pairs.end());
    all.insert(all.end(), split.test.pairs.begin(), split.test.pairs.end());
    REQUIRE(all.size() == corpus.pairs.size());
    auto key = [](const SentencePair &p) { return p.source + "\x1f" + p.target; };
    std::vector<std::string> got, want;
    for (const auto &p : all) got.push_back(key(p));
    for (const auto &p : corpus.pairs) want.push_back(key(p));
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);
  }
}
