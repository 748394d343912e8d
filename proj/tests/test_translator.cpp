#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "reference.hpp"
#include "selfvocab/errors.hpp"
#include "selfvocab/parallel.hpp"
#include "selfvocab/translator.hpp"
#include "support/generators.hpp"
#include "support/paths.hpp"

using namespace selfvocab;
namespace fs = std::filesystem;

namespace {

using Lines = std::vector<std::vector<std::string>>;

fs::path work_dir() {
  const auto dir = fs::path(kTestWorkRoot) / "translator";
  fs::create_directories(dir);
  return dir;
}

} // namespace

TEST_CASE("a single pair concentrates immediately") {
  const Lines src = {{"a</w>"}};
  const Lines trg = {{"x</w>"}};
  const auto model = translator::train_toy(src, trg, 1, 0.1, 0);
  CHECK(model.translation_prob("a</w>", "x</w>") == 1.0);
}

TEST_CASE("bijective corpus concentrates above 0.99") {
  std::mt19937_64 rng(1234);
  const auto corpus = testgen::bijective_corpus(rng);
  const auto model = translator::train_toy(corpus.src, corpus.trg, 10, 0.1, 0);
  for (std::size_t i = 0; i < corpus.src_lex.size(); ++i) {
    CHECK(model.translation_prob(corpus.src_lex[i], corpus.trg_lex[i]) > 0.99);
  }
}

TEST_CASE("trainer agrees with the serial EM reference") {
  std::mt19937_64 rng(77);
  for (int iter = 0; iter < 10; ++iter) {
    Lines src, trg;
    testgen::random_parallel(rng, 20, src, trg);
    const auto model = translator::train_toy(src, trg, 5, 0.1, 0);
    const auto reference = ref::train_ibm1_serial(src, trg, 5);
    for (const auto &[pair, prob] : reference.lexicon) {
      CHECK(model.translation_prob(pair.first, pair.second) ==
            doctest::Approx(prob).epsilon(1e-9));
    }
    REQUIRE(model.log_likelihood_history().size() == reference.log_likelihood.size());
    for (std::size_t r = 0; r < reference.log_likelihood.size(); ++r) {
      CHECK(model.log_likelihood_history()[r] ==
            doctest::Approx(reference.log_likelihood[r]).epsilon(1e-9));
    }
  }
}

TEST_CASE("log-likelihood is non-decreasing across EM rounds") {
  std::mt19937_64 rng(555);
  for (int iter = 0; iter < 10; ++iter) {
    Lines src, trg;
    testgen::random_parallel(rng, 25, src, trg);
    const auto model = translator::train_toy(src, trg, 20, 0.1, 0);
    const auto &history = model.log_likelihood_history();
    REQUIRE(history.size() == 20);
    for (std::size_t r = 1; r < history.size(); ++r) {
      CHECK(history[r] >= history[r - 1] - 1e-9);
    }
  }
}

TEST_CASE("translation probabilities normalize per source type") {
  std::mt19937_64 rng(31);
  Lines src, trg;
  testgen::random_parallel(rng, 30, src, trg);
  const auto model = translator::train_toy(src, trg, 8, 0.1, 0);

  std::set<std::string> src_types, trg_types;
  for (const auto &line : src) src_types.insert(line.begin(), line.end());
  for (const auto &line : trg) trg_types.insert(line.begin(), line.end());
  for (const auto &s : src_types) {
    double total = 0.0;
    for (const auto &t : trg_types) total += model.translation_prob(s, t);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("bigram distribution sums to one over observed types plus unknown") {
  std::mt19937_64 rng(32);
  Lines src, trg;
  testgen::random_parallel(rng, 20, src, trg);
  const auto model = translator::train_toy(src, trg, 3, 0.25, 0);

  std::set<std::string> trg_types;
  for (const auto &line : trg) trg_types.insert(line.begin(), line.end());
  std::vector<std::string> contexts = {"", *trg_types.begin()};
  for (const auto &context : contexts) {
    double total = model.bigram_prob(context, "\x01unknown\x01");
    for (const auto &t : trg_types) total += model.bigram_prob(context, t);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("training is deterministic and thread-count independent") {
  std::mt19937_64 rng(404);
  Lines src, trg;
  testgen::random_parallel(rng, 40, src, trg);

  par::set_thread_count(1);
  const auto serial_model = translator::train_toy(src, trg, 6, 0.1, 9);
  par::set_thread_count(4);
  const auto parallel_model = translator::train_toy(src, trg, 6, 0.1, 9);
  par::set_thread_count(0);
  const auto again = translator::train_toy(src, trg, 6, 0.1, 9);

  CHECK(serial_model.log_likelihood_history() == parallel_model.log_likelihood_history());
  CHECK(serial_model.log_likelihood_history() == again.log_likelihood_history());
  std::set<std::string> src_types, trg_types;
  for (const auto &line : src) src_types.insert(line.begin(), line.end());
  for (const auto &line : trg) trg_types.insert(line.begin(), line.end());
  for (const auto &s : src_types) {
    for (const auto &t : trg_types) {
      // bitwise equality: the reduction order is fixed by the block layout
      CHECK(serial_model.translation_prob(s, t) == parallel_model.translation_prob(s, t));
    }
  }
}

TEST_CASE("identity-trained model copies its input") {
  std::mt19937_64 rng(71);
  auto corpus = testgen::bijective_corpus(rng, 6, 60, 5);
  // identity task: target equals source
  const auto model = translator::train_toy(corpus.src, corpus.src, 10, 0.1, 0);
  const std::vector<std::string> line = {corpus.src_lex[0], corpus.src_lex[1]};
  CHECK(translator::translate(model, line) == line);
}

TEST_CASE("unknown source tokens fall back to the most frequent target") {
  const Lines src = {{"a</w>", "b</w>"}, {"a</w>"}};
  const Lines trg = {{"x</w>", "y</w>"}, {"x</w>"}};
  const auto model = translator::train_toy(src, trg, 5, 0.1, 0);
  CHECK(model.fallback_token() == "x</w>");
  const std::vector<std::string> line = {"zzz</w>"};
  CHECK(translator::translate(model, line) == std::vector<std::string>{"x</w>"});
}

TEST_CASE("translation is deterministic and length-clamped") {
  std::mt19937_64 rng(88);
  Lines src, trg;
  testgen::random_parallel(rng, 40, src, trg);
  const auto model = translator::train_toy(src, trg, 5, 0.1, 0);

  for (int iter = 0; iter < 50; ++iter) {
    std::vector<std::string> line;
    const int len = 1 + static_cast<int>(rng() % 8);
    for (int k = 0; k < len; ++k) line.push_back(testgen::random_word(rng, 6, 1, 4));
    const auto first = translator::translate(model, line);
    const auto second = translator::translate(model, line);
    CHECK(first == second);
    CHECK(first.size() >= 1);
    CHECK(first.size() <= 2 * line.size());
  }
}

TEST_CASE("translate requires a trained model and non-empty input") {
  translator::LexiconModel untrained;
  const std::vector<std::string> line = {"a</w>"};
  CHECK_THROWS_AS(translator::translate(untrained, line), ModelStateError);

  const Lines src = {{"a</w>"}};
  const auto model = translator::train_toy(src, src, 1, 0.1, 0);
  CHECK_THROWS_AS(translator::translate(model, {}), EmptyInputError);
}

TEST_CASE("generate_pseudo pairs sources with translations in order") {
  std::mt19937_64 rng(91);
  auto corpus = testgen::bijective_corpus(rng, 5, 50, 4);
  const auto model = translator::train_toy(corpus.src, corpus.src, 10, 0.1, 0);

  Lines sources(corpus.src.begin(), corpus.src.begin() + 5);
  const auto pseudo = translator::generate_pseudo(model, sources);
  REQUIRE(pseudo.size() == 5);
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    // identity task: pseudo target text equals the source text
    CHECK(pseudo.pairs[i].target == pseudo.pairs[i].source);
  }
  CHECK(translator::generate_pseudo(model, {}).size() == 0);
}

TEST_CASE("external adapter runs the copy helper") {
  const auto dir = work_dir();
  const Lines sources = {{"a", "b</w>"}, {"c</w>"}};
  const std::string command = std::string(kCopyToolPath) + " {in} {out}";
  const auto out = translator::external_translate(command, (dir / "in.txt").string(),
                                                  (dir / "out.txt").string(), sources);
  CHECK(out == sources);
}

TEST_CASE("external adapter surfaces failures") {
  const auto dir = work_dir();
  const Lines sources = {{"a</w>"}};

  CHECK_THROWS_AS(translator::external_translate("true", (dir / "i").string(),
                                                 (dir / "o").string(), sources),
                  DomainError); // no {in}/{out} placeholders

  CHECK_THROWS_AS(translator::external_translate("cat {in} > {out}; exit 1",
                                                 (dir / "i2").string(), (dir / "o2").string(),
                                                 sources),
                  SubprocessError);

  const Lines three = {{"a</w>"}, {"b</w>"}, {"c</w>"}};
  CHECK_THROWS_AS(translator::external_translate("head -n 2 {in} > {out}",
                                                 (dir / "i3").string(), (dir / "o3").string(),
                                                 three),
                  AlignmentError);
}
