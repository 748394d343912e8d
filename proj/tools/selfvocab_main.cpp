// selfvocab command-line front end: corpus prep, BPE learning/application,
// vocabulary metrics, BLEU scoring and full self-vocabularizing runs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "selfvocab/bpe.hpp"
#include "selfvocab/corpus.hpp"
#include "selfvocab/errors.hpp"
#include "selfvocab/eval.hpp"
#include "selfvocab/loop.hpp"
#include "selfvocab/metrics.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace selfvocab;

namespace {

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

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

std::vector<std::string> split_spaces(const std::string &line) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < line.size()) {
    const std::size_t space = line.find(' ', start);
    const std::size_t end = space == std::string::npos ? line.size() : space;
    if (end > start) tokens.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return tokens;
}

std::string join(const std::vector<std::string> &tokens) {
  std::string line;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) line += ' ';
    line += tokens[i];
  }
  return line;
}

// Holds <dir>/.selfvocab.lock for the lifetime of a run; refuses to start
// when another process already holds it.
struct DirLock {
  std::string path;

  explicit DirLock(const std::string &dir) : path((fs::path(dir) / ".selfvocab.lock").string()) {
    FILE *f = std::fopen(path.c_str(), "wx");
    if (f == nullptr) {
      throw IoError("output directory is locked by another run (" + path + ")");
    }
    std::fclose(f);
  }
  ~DirLock() { std::remove(path.c_str()); }
  DirLock(const DirLock &) = delete;
  DirLock &operator=(const DirLock &) = delete;
};

void cmd_learn_bpe(const std::vector<std::string> &inputs, int merges,
                   const std::string &output) {
  if (merges < 0) throw UsageError("merge count must be non-negative");
  bpe::WordCounts words;
  for (const auto &input : inputs) {
    for (const auto &line : read_lines(input)) words.add(pretokenize(line));
  }
  const auto table = bpe::learn_bpe(words, static_cast<std::size_t>(merges));
  bpe::save_merge_table(table, output);
}

void cmd_apply_bpe(const std::string &table_path, const std::string &input,
                   const std::string &output) {
  const auto table = bpe::load_merge_table(table_path);
  const auto lines = read_lines(input);
  std::vector<WordSequence> pretok(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) pretok[i] = pretokenize(lines[i]);
  const auto segmented = bpe::segment_corpus(table, pretok);
  std::string text;
  for (const auto &line : segmented.lines) {
    text += join(line);
    text += '\n';
  }
  write_text(output, text);
}

void cmd_detok(const std::string &input, const std::string &output) {
  std::string text;
  for (const auto &line : read_lines(input)) {
    text += join(bpe::detokenize(split_spaces(line)));
    text += '\n';
  }
  write_text(output, text);
}

void cmd_metrics(const std::string &input, const std::string &ref_vocab_path) {
  bpe::SegmentedCorpus segmented;
  for (const auto &line : read_lines(input)) segmented.lines.push_back(split_spaces(line));
  const auto stats = metrics::corpus_entropy(segmented);

  json j;
  j["entropy_bits_per_char"] = stats.entropy;
  j["avg_token_len"] = stats.avg_token_length;
  j["vocab_size"] = stats.vocab_size;
  j["ttr_scaled"] = stats.ttr_scaled;
  j["token_occurrences"] = stats.token_occurrences;
  if (!ref_vocab_path.empty()) {
    const auto ref = bpe::load_vocabulary(ref_vocab_path);
    const auto ref_stats = metrics::corpus_entropy(ref);
    j["overlap_pct"] = metrics::overlap_percent(bpe::realized_vocabulary(segmented), ref);
    j["ref_vocab_size"] = ref.size();
    j["ref_entropy_bits_per_char"] = ref_stats.entropy;
    j["shift_vs_ref"] = metrics::vocab_shift(stats.entropy, ref_stats.entropy, ref.size());
  }
  std::cout << j.dump(2) << "\n";
}

void cmd_bleu(const std::string &hyp_path, const std::string &ref_path, bool smooth) {
  const auto hyp_lines = read_lines(hyp_path);
  const auto ref_lines = read_lines(ref_path);
  std::vector<WordSequence> hyp(hyp_lines.size()), ref(ref_lines.size());
  for (std::size_t i = 0; i < hyp_lines.size(); ++i) hyp[i] = split_spaces(hyp_lines[i]);
  for (std::size_t i = 0; i < ref_lines.size(); ++i) ref[i] = split_spaces(ref_lines[i]);
  const auto report = eval::corpus_bleu(hyp, ref, smooth);

  json j;
  j["score"] = report.score;
  j["precisions"] = report.precisions;
  j["brevity_penalty"] = report.brevity_penalty;
  j["hyp_length"] = report.hyp_length;
  j["ref_length"] = report.ref_length;
  std::cout << j.dump(2) << "\n";
}

void cmd_run(const std::string &config_path, std::optional<std::uint64_t> seed_override,
             const std::string &output_dir_override, bool quiet) {
  auto spec = loop::load_run_spec(config_path);
  if (seed_override) spec.config.base_seed = *seed_override;
  if (!output_dir_override.empty()) spec.output_dir = output_dir_override;

  for (const auto *path : {&spec.train_source, &spec.train_target, &spec.dev_source,
                           &spec.dev_target, &spec.test_source, &spec.test_target}) {
    if (!fs::exists(*path)) throw IoError("input file does not exist: " + *path);
  }

  fs::create_directories(spec.output_dir);
  DirLock lock(spec.output_dir);

  const auto train = load_parallel(spec.train_source, spec.train_target, "train", Split::train);
  const auto dev = load_parallel(spec.dev_source, spec.dev_target, "dev", Split::dev);
  const auto test = load_parallel(spec.test_source, spec.test_target, "test", Split::test);
  if (!quiet && train.dropped_pairs + dev.dropped_pairs + test.dropped_pairs > 0) {
    std::cerr << "dropped empty pairs: train " << train.dropped_pairs << ", dev "
              << dev.dropped_pairs << ", test " << test.dropped_pairs << "\n";
  }

  loop::RunOptions options;
  options.artifact_dir = spec.output_dir;
  options.progress = quiet ? nullptr : &std::cout;

  const auto report_json_path = (fs::path(spec.output_dir) / "report.json").string();
  const auto report_csv_path = (fs::path(spec.output_dir) / "report.csv").string();
  try {
    const auto report =
        loop::run_self_vocab(spec.config, train.corpus, dev.corpus, test.corpus, options);
    write_text(report_json_path, loop::report_to_json(report));
    write_text(report_csv_path, loop::report_to_csv(report));
  } catch (const loop::LoopError &e) {
    // flush what completed before the failure
    write_text(report_json_path, loop::partial_report_to_json(e.partial_report, e.what()));
    write_text(report_csv_path, loop::report_to_csv(e.partial_report));
    throw;
  }
}

void cmd_plot_data(const std::string &report_path, const std::string &prefix) {
  std::ifstream in(report_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + report_path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto report = loop::report_from_json(text);
  for (const auto &[name, csv] : loop::plot_series(report)) {
    write_text(prefix + "_" + name + ".csv", csv);
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"self-vocabularizing training toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::string output_dir;
  bool quiet = false;
  app.add_option("--seed", seed, "override the configured base seed");
  app.add_option("--output-dir", output_dir, "override the configured output directory");
  app.add_flag("--quiet", quiet, "suppress progress output");

  std::function<void()> action;

  {
    auto *cmd = app.add_subcommand("learn-bpe", "learn a BPE merge table from text");
    auto inputs = std::make_shared<std::vector<std::string>>();
    auto merges = std::make_shared<int>(0);
    auto output = std::make_shared<std::string>();
    cmd->add_option("input", *inputs, "input text file(s)")->required()->expected(1, 2);
    cmd->add_option("-m,--merges", *merges, "number of merges to learn")->required();
    cmd->add_option("-o,--output", *output, "merge table output path")->required();
    cmd->callback([=, &action] { action = [=] { cmd_learn_bpe(*inputs, *merges, *output); }; });
  }
  {
    auto *cmd = app.add_subcommand("apply-bpe", "segment text with a merge table");
    auto table = std::make_shared<std::string>();
    auto input = std::make_shared<std::string>();
    auto output = std::make_shared<std::string>();
    cmd->add_option("-t,--table", *table, "merge table path")->required();
    cmd->add_option("input", *input, "input text file")->required();
    cmd->add_option("-o,--output", *output, "segmented output path")->required();
    cmd->callback([=, &action] { action = [=] { cmd_apply_bpe(*table, *input, *output); }; });
  }
  {
    auto *cmd = app.add_subcommand("detok", "reverse BPE segmentation");
    auto input = std::make_shared<std::string>();
    auto output = std::make_shared<std::string>();
    cmd->add_option("input", *input, "segmented input file")->required();
    cmd->add_option("-o,--output", *output, "detokenized output path")->required();
    cmd->callback([=, &action] { action = [=] { cmd_detok(*input, *output); }; });
  }
  {
    auto *cmd = app.add_subcommand("metrics", "vocabulary statistics of a segmented file");
    auto input = std::make_shared<std::string>();
    auto ref_vocab = std::make_shared<std::string>();
    cmd->add_option("input", *input, "segmented input file")->required();
    cmd->add_option("--ref-vocab", *ref_vocab, "vocabulary file to compute overlap against");
    cmd->callback([=, &action] { action = [=] { cmd_metrics(*input, *ref_vocab); }; });
  }
  {
    auto *cmd = app.add_subcommand("bleu", "corpus BLEU of hypothesis vs reference file");
    auto hyp = std::make_shared<std::string>();
    auto ref = std::make_shared<std::string>();
    auto smooth = std::make_shared<bool>(false);
    cmd->add_option("hypotheses", *hyp, "hypothesis file, one sentence per line")->required();
    cmd->add_option("references", *ref, "reference file, one sentence per line")->required();
    cmd->add_flag("--smooth", *smooth, "add-one smoothing on n-gram counts");
    cmd->callback([=, &action] { action = [=] { cmd_bleu(*hyp, *ref, *smooth); }; });
  }
  {
    auto *cmd = app.add_subcommand("run", "run self-vocabularizing training from a config file");
    auto config = std::make_shared<std::string>();
    cmd->add_option("config", *config, "JSON config file")->required();
    cmd->callback(
        [=, &action, &seed, &output_dir, &quiet] { action = [=] { cmd_run(*config, seed, output_dir, quiet); }; });
  }
  {
    auto *cmd = app.add_subcommand("plot-data", "emit per-metric CSV series from a report");
    auto report = std::make_shared<std::string>();
    auto prefix = std::make_shared<std::string>();
    cmd->add_option("report", *report, "report JSON path")->required();
    cmd->add_option("prefix", *prefix, "output file prefix")->required();
    cmd->callback([=, &action] { action = [=] { cmd_plot_data(*report, *prefix); }; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    action();
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
