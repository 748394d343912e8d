#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sys/wait.h>

#include <json.hpp>

#include "support/paths.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  const auto dir = fs::path(kTestWorkRoot) / "cli";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

CliResult run_cli(const std::string &args) {
  const auto dir = work_dir();
  const auto out_path = dir / "stdout.txt";
  const auto err_path = dir / "stderr.txt";
  const std::string command = std::string(kCliPath) + " " + args + " > " + out_path.string() +
                              " 2> " + err_path.string();
  const int status = std::system(command.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

std::string strip_wall_time_csv(const std::string &csv) {
  std::string out;
  for (std::size_t start = 0; start < csv.size();) {
    auto end = csv.find('\n', start);
    if (end == std::string::npos) end = csv.size();
    const auto line = csv.substr(start, end - start);
    const auto last_comma = line.rfind(',');
    out += line.substr(0, last_comma);
    out += '\n';
    start = end + 1;
  }
  return out;
}

} // namespace

TEST_CASE("learn-bpe writes a table of at most N rules") {
  const auto dir = work_dir();
  spit(dir / "text.txt", "low lower lowest\nnew newer newest\nlow low new\n");
  const auto result =
      run_cli("learn-bpe -m 100 -o " + (dir / "table.merges").string() + " " +
              (dir / "text.txt").string());
  CHECK(result.exit_code == 0);

  const auto table = slurp(dir / "table.merges");
  CHECK(table.rfind("#selfvocab-bpe v1 marker=</w>\n", 0) == 0);
  std::size_t rules = 0;
  for (char c : table) rules += c == '\n';
  CHECK(rules - 1 <= 100);
}

TEST_CASE("learn-bpe maps missing files to exit 1 naming the path") {
  const auto dir = work_dir();
  const auto result = run_cli("learn-bpe -m 10 -o " + (dir / "t.merges").string() +
                              " /nonexistent/input.txt");
  CHECK(result.exit_code == 1);
  CHECK(result.err.find("/nonexistent/input.txt") != std::string::npos);
}

TEST_CASE("learn-bpe rejects a negative merge count with exit 2") {
  const auto dir = work_dir();
  spit(dir / "text.txt", "a b c\n");
  const auto result = run_cli("learn-bpe -m -3 -o " + (dir / "t.merges").string() + " " +
                              (dir / "text.txt").string());
  CHECK(result.exit_code == 2);
}

TEST_CASE("apply-bpe with an empty table splits to characters") {
  const auto dir = work_dir();
  spit(dir / "empty.merges", "#selfvocab-bpe v1 marker=</w>\n");
  spit(dir / "in.txt", "ab c\n");
  const auto result = run_cli("apply-bpe -t " + (dir / "empty.merges").string() + " -o " +
                              (dir / "seg.txt").string() + " " + (dir / "in.txt").string());
  CHECK(result.exit_code == 0);
  CHECK(slurp(dir / "seg.txt") == "a b</w> c</w>\n");
}

TEST_CASE("apply-bpe then detok restores the pretokenized text") {
  const auto dir = work_dir();
  spit(dir / "corpus.txt", "Hello, world!\nlow lower lowest\nnew newer newest\n");
  CHECK(run_cli("learn-bpe -m 40 -o " + (dir / "t.merges").string() + " " +
                (dir / "corpus.txt").string())
            .exit_code == 0);
  CHECK(run_cli("apply-bpe -t " + (dir / "t.merges").string() + " -o " +
                (dir / "seg.txt").string() + " " + (dir / "corpus.txt").string())
            .exit_code == 0);
  CHECK(run_cli("detok -o " + (dir / "back.txt").string() + " " + (dir / "seg.txt").string())
            .exit_code == 0);
  CHECK(slurp(dir / "back.txt") == "hello , world !\nlow lower lowest\nnew newer newest\n");
}

TEST_CASE("apply-bpe reports a bad table header as exit 1") {
  const auto dir = work_dir();
  spit(dir / "bad.merges", "not a header\na b\n");
  spit(dir / "in.txt", "ab\n");
  const auto result = run_cli("apply-bpe -t " + (dir / "bad.merges").string() + " -o " +
                              (dir / "o.txt").string() + " " + (dir / "in.txt").string());
  CHECK(result.exit_code == 1);
  CHECK(result.err.find("header") != std::string::npos);
}

TEST_CASE("metrics prints the documented JSON keys") {
  const auto dir = work_dir();
  spit(dir / "seg.txt", "ab cd\nab cd\n");
  const auto result = run_cli("metrics " + (dir / "seg.txt").string());
  CHECK(result.exit_code == 0);
  const auto j = json::parse(result.out);
  CHECK(j.at("entropy_bits_per_char").get<double>() == doctest::Approx(0.5));
  CHECK(j.at("avg_token_len").get<double>() == doctest::Approx(2.0));
  CHECK(j.at("vocab_size").get<int>() == 2);
  CHECK(j.at("ttr_scaled").get<double>() == doctest::Approx(500.0));
  CHECK(j.at("token_occurrences").get<int>() == 4);
}

TEST_CASE("metrics against a matching vocabulary reports full overlap") {
  const auto dir = work_dir();
  spit(dir / "seg.txt", "x</w> y</w>\n");
  spit(dir / "ref.vocab", "x</w>\t1\ny</w>\t1\n");
  const auto result =
      run_cli("metrics --ref-vocab " + (dir / "ref.vocab").string() + " " +
              (dir / "seg.txt").string());
  CHECK(result.exit_code == 0);
  const auto j = json::parse(result.out);
  CHECK(j.at("overlap_pct").get<double>() == 100.0);
  CHECK(j.at("ref_vocab_size").get<int>() == 2);
  // identical vocabularies: zero entropy change, zero shift
  CHECK(j.at("shift_vs_ref").get<double>() == 0.0);
}

TEST_CASE("metrics on an empty file exits 1") {
  const auto dir = work_dir();
  spit(dir / "empty.txt", "");
  const auto result = run_cli("metrics " + (dir / "empty.txt").string());
  CHECK(result.exit_code == 1);
}

TEST_CASE("bleu scores identical files at 100") {
  const auto dir = work_dir();
  spit(dir / "hyp.txt", "the cat sat\non the mat\n");
  const auto result =
      run_cli("bleu " + (dir / "hyp.txt").string() + " " + (dir / "hyp.txt").string());
  CHECK(result.exit_code == 0);
  const auto j = json::parse(result.out);
  CHECK(j.at("score").get<double>() == 100.0);
  CHECK(j.at("precisions").size() == 4);
}

TEST_CASE("run executes the bundled config and is reproducible") {
  const auto dir = work_dir();
  const auto config = (fs::path(kSynthDataDir) / "run_config.json").string();
  const auto out1 = (dir / "run1").string();
  const auto out2 = (dir / "run2").string();
  fs::remove_all(out1);
  fs::remove_all(out2);

  const auto first = run_cli("--quiet --output-dir " + out1 + " run " + config);
  CHECK(first.exit_code == 0);
  const auto report = json::parse(slurp(fs::path(out1) / "report.json"));
  CHECK(report.at("iterations").size() >= 2);
  CHECK(report.at("schema") == "selfvocab-report v1");

  const auto second = run_cli("--quiet --output-dir " + out2 + " run " + config);
  CHECK(second.exit_code == 0);
  CHECK(strip_wall_time_csv(slurp(fs::path(out1) / "report.csv")) ==
        strip_wall_time_csv(slurp(fs::path(out2) / "report.csv")));
}

TEST_CASE("run honors the global seed override") {
  const auto dir = work_dir();
  const auto config = (fs::path(kSynthDataDir) / "run_config.json").string();
  const auto out = (dir / "seeded").string();
  fs::remove_all(out);
  const auto result = run_cli("--quiet --seed 4242 --output-dir " + out + " run " + config);
  CHECK(result.exit_code == 0);
  const auto report = json::parse(slurp(fs::path(out) / "report.json"));
  CHECK(report.at("config").at("base_seed").get<int>() == 4242);
}

TEST_CASE("run flushes a partial report when an iteration fails") {
  const auto dir = work_dir();
  spit(dir / "failing.json", R"({
    "train_source": ")" + (fs::path(kSynthDataDir) / "train.src").string() + R"(",
    "train_target": ")" + (fs::path(kSynthDataDir) / "train.trg").string() + R"(",
    "dev_source": ")" + (fs::path(kSynthDataDir) / "dev.src").string() + R"(",
    "dev_target": ")" + (fs::path(kSynthDataDir) / "dev.trg").string() + R"(",
    "test_source": ")" + (fs::path(kSynthDataDir) / "test.src").string() + R"(",
    "test_target": ")" + (fs::path(kSynthDataDir) / "test.trg").string() + R"(",
    "output_dir": "o",
    "model": {"type": "external", "command": "cp {in} {out}; exit 1"}
  })");
  const auto out = (dir / "partial").string();
  fs::remove_all(out);
  const auto result =
      run_cli("--quiet --output-dir " + out + " run " + (dir / "failing.json").string());
  CHECK(result.exit_code == 1);
  const auto report = json::parse(slurp(fs::path(out) / "report.json"));
  CHECK(report.contains("error"));
  CHECK(report.at("iterations").is_array());
}

TEST_CASE("run rejects unknown config keys with exit 2 naming the key") {
  const auto dir = work_dir();
  spit(dir / "bad_config.json", R"({
    "train_source": "x", "train_target": "y",
    "dev_source": "x", "dev_target": "y",
    "test_source": "x", "test_target": "y",
    "output_dir": "o", "bleu_epsilonn": 0.5
  })");
  const auto result = run_cli("run " + (dir / "bad_config.json").string());
  CHECK(result.exit_code == 2);
  CHECK(result.err.find("bleu_epsilonn") != std::string::npos);
}

TEST_CASE("plot-data emits six series from a report") {
  const auto dir = work_dir();
  const auto config = (fs::path(kSynthDataDir) / "run_config.json").string();
  const auto out = (dir / "plotrun").string();
  fs::remove_all(out);
  REQUIRE(run_cli("--quiet --output-dir " + out + " run " + config).exit_code == 0);

  const auto prefix = (dir / "series").string();
  const auto result = run_cli("plot-data " + (fs::path(out) / "report.json").string() + " " + prefix);
  CHECK(result.exit_code == 0);
  for (const char *name : {"vocab_size", "entropy", "overlap", "ttr", "bleu", "vc"}) {
    CHECK(fs::exists(prefix + "_" + std::string(name) + ".csv"));
  }
  // idempotent re-emission
  const auto before = slurp(prefix + "_bleu.csv");
  CHECK(run_cli("plot-data " + (fs::path(out) / "report.json").string() + " " + prefix).exit_code ==
        0);
  CHECK(slurp(prefix + "_bleu.csv") == before);
}

TEST_CASE("plot-data rejects a report without records") {
  const auto dir = work_dir();
  spit(dir / "empty_report.json", R"({
    "schema": "selfvocab-report v1",
    "config": {"target_merges": 10, "max_iterations": 1, "bleu_epsilon": 0.1,
               "overlap_stop": 99.0, "base_seed": 0, "joint_bpe": true,
               "model": {"type": "toy", "em_iterations": 1, "alpha": 0.1}},
    "iterations": [],
    "stop_reason": "max_iterations"
  })");
  const auto result =
      run_cli("plot-data " + (dir / "empty_report.json").string() + " " + (dir / "p").string());
  CHECK(result.exit_code == 1);
}

TEST_CASE("unknown subcommands exit 2") {
  CHECK(run_cli("frobnicate").exit_code == 2);
}

TEST_CASE("run refuses a locked output directory") {
  const auto dir = work_dir();
  const auto config = (fs::path(kSynthDataDir) / "run_config.json").string();
  const auto out = (dir / "locked").string();
  fs::create_directories(out);
  spit(fs::path(out) / ".selfvocab.lock", "");
  const auto result = run_cli("--quiet --output-dir " + out + " run " + config);
  CHECK(result.exit_code == 1);
  CHECK(result.err.find("lock") != std::string::npos);
  fs::remove(fs::path(out) / ".selfvocab.lock");
}
