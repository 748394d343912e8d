#include "selfvocab/loop.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "selfvocab/bpe.hpp"
#include "selfvocab/errors.hpp"
#include "selfvocab/eval.hpp"
#include "selfvocab/metrics.hpp"
#include "selfvocab/translator.hpp"

namespace selfvocab::loop {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::uint64_t fnv1a_words(std::span<const WordSequence> lines, std::uint64_t h) {
  for (const auto &line : lines) {
    for (const auto &word : line) {
      for (unsigned char c : word) {
        h ^= c;
        h *= 0x100000001b3ull;
      }
      h ^= 0x1f;
      h *= 0x100000001b3ull;
    }
    h ^= 0x0a;
    h *= 0x100000001b3ull;
  }
  return h;
}

struct TablePair {
  bpe::MergeTable source;
  bpe::MergeTable target; // equals source in joint mode
};

TablePair learn_initial(const RunConfig &config, std::span<const WordSequence> src_words,
                        std::span<const WordSequence> trg_words) {
  TablePair tables;
  if (config.joint_bpe) {
    bpe::WordCounts words;
    words.add_lines(src_words);
    words.add_lines(trg_words);
    tables.source = bpe::learn_bpe(words, config.target_merges);
    tables.target = tables.source;
  } else {
    bpe::WordCounts src;
    src.add_lines(src_words);
    tables.source = bpe::learn_bpe(src, config.target_merges);
    bpe::WordCounts trg;
    trg.add_lines(trg_words);
    tables.target = bpe::learn_bpe(trg, config.target_merges);
  }
  return tables;
}

TablePair relearn(const RunConfig &config, const TablePair &initial,
                  std::span<const WordSequence> pseudo_src,
                  std::span<const WordSequence> pseudo_trg) {
  TablePair tables;
  if (config.joint_bpe) {
    bpe::WordCounts words;
    words.add_lines(pseudo_src);
    words.add_lines(pseudo_trg);
    tables.source = bpe::learn_bpe(words, config.target_merges);
    tables.target = tables.source;
  } else {
    // per-side mode keeps the source table from the initial learning inputs
    tables.source = initial.source;
    bpe::WordCounts trg;
    trg.add_lines(pseudo_trg);
    tables.target = bpe::learn_bpe(trg, config.target_merges);
  }
  return tables;
}

bpe::SegmentedCorpus combine(const bpe::SegmentedCorpus &a, const bpe::SegmentedCorpus &b) {
  bpe::SegmentedCorpus out;
  out.table_id = a.table_id == b.table_id ? a.table_id : a.table_id + "+" + b.table_id;
  out.lines.reserve(a.lines.size() + b.lines.size());
  out.lines.insert(out.lines.end(), a.lines.begin(), a.lines.end());
  out.lines.insert(out.lines.end(), b.lines.begin(), b.lines.end());
  return out;
}

std::vector<WordSequence> detokenize_lines(const std::vector<std::vector<std::string>> &lines) {
  std::vector<WordSequence> out(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) out[i] = bpe::detokenize(lines[i]);
  return out;
}

std::string join_words(const WordSequence &words) {
  std::string line;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) line += ' ';
    line += words[i];
  }
  return line;
}

// Batch translation behind one interface so the loop body reads the same for
// the built-in model and an external command.
struct Translator {
  const translator::LexiconModel *toy = nullptr;
  const ExternalModelConfig *external = nullptr;
  std::string work_dir;

  std::vector<std::vector<std::string>> operator()(
      std::span<const std::vector<std::string>> sources) const {
    if (toy != nullptr) return translator::translate_lines(*toy, sources);
    const auto in_path = (fs::path(work_dir) / "external.in").string();
    const auto out_path = (fs::path(work_dir) / "external.out").string();
    return translator::external_translate(external->command_template, in_path, out_path, sources);
  }
};

void write_iteration_artifacts(const std::string &dir, int t, const RunConfig &config,
                               const TablePair &tables, const bpe::Vocabulary &vocab) {
  if (dir.empty()) return;
  char stem[32];
  std::snprintf(stem, sizeof(stem), "iter%03d", t);
  const fs::path base = fs::path(dir);
  if (config.joint_bpe) {
    bpe::save_merge_table(tables.source, (base / (std::string(stem) + ".merges")).string());
  } else {
    bpe::save_merge_table(tables.source, (base / (std::string(stem) + ".src.merges")).string());
    bpe::save_merge_table(tables.target, (base / (std::string(stem) + ".trg.merges")).string());
  }
  bpe::save_vocabulary(vocab, (base / (std::string(stem) + ".vocab")).string());
}

} // namespace

void RunConfig::validate() const {
  if (max_iterations < 1) throw DomainError("max_iterations must be at least 1");
  if (bleu_epsilon < 0) throw DomainError("bleu_epsilon must be non-negative");
  if (overlap_stop <= 0 || overlap_stop > 100)
    throw DomainError("overlap_stop must lie in (0, 100]");
  if (const auto *toy = std::get_if<ToyModelConfig>(&model)) {
    if (toy->em_iterations < 1) throw DomainError("em_iterations must be at least 1");
    if (toy->alpha <= 0) throw DomainError("alpha must be positive");
  } else {
    const auto &cmd = std::get<ExternalModelConfig>(model).command_template;
    if (cmd.find("{in}") == std::string::npos || cmd.find("{out}") == std::string::npos)
      throw DomainError("external command template must contain {in} and {out}");
  }
}

const char *stop_reason_name(StopReason reason) {
  switch (reason) {
  case StopReason::max_iterations: return "max_iterations";
  case StopReason::bleu_converged: return "bleu_converged";
  case StopReason::overlap_converged: return "overlap_converged";
  }
  return "max_iterations";
}

StopDecision converged(std::span<const double> dev_bleu_history,
                       std::span<const IterationRecord> records, const RunConfig &config) {
  if (dev_bleu_history.empty()) throw EmptyInputError("convergence needs at least one BLEU value");
  if (dev_bleu_history.size() >= 2) {
    const double gain = dev_bleu_history[dev_bleu_history.size() - 1] -
                        dev_bleu_history[dev_bleu_history.size() - 2];
    if (gain < config.bleu_epsilon) return {true, StopReason::bleu_converged};
  }
  if (!records.empty() && records.back().overlap_pct.has_value() &&
      *records.back().overlap_pct >= config.overlap_stop) {
    return {true, StopReason::overlap_converged};
  }
  return {false, StopReason::max_iterations};
}

RunReport run_self_vocab(const RunConfig &config, const ParallelCorpus &train,
                         const ParallelCorpus &dev, const ParallelCorpus &test,
                         const RunOptions &options) {
  config.validate();
  if (train.pairs.empty() || dev.pairs.empty() || test.pairs.empty())
    throw EmptyInputError("all three splits must be non-empty");

  const auto train_src = pretokenize_sources(train);
  const auto train_trg = pretokenize_targets(train);
  const auto dev_src = pretokenize_sources(dev);
  const auto dev_trg = pretokenize_targets(dev);
  const auto test_src = pretokenize_sources(test);
  const auto test_trg = pretokenize_targets(test);

  // The loop only ever re-derives D_t from this original pretokenization;
  // the checksum guards that nothing mutates it between iterations.
  const std::uint64_t train_checksum =
      fnv1a_words(train_trg, fnv1a_words(train_src, 0xcbf29ce484222325ull));

  if (!options.artifact_dir.empty()) fs::create_directories(options.artifact_dir);

  RunReport report;
  report.config = config;

  TablePair initial_tables = learn_initial(config, train_src, train_trg);
  TablePair tables = initial_tables;

  std::vector<double> dev_history;
  bpe::Vocabulary prev_vocab;
  double prev_entropy = 0.0;

  if (options.progress != nullptr) {
    *options.progress << "    t     |V|        H   overlap  dev_bleu\n";
  }

  for (int t = 0;; ++t) {
    try {
    const auto started = std::chrono::steady_clock::now();

    if (fnv1a_words(train_trg, fnv1a_words(train_src, 0xcbf29ce484222325ull)) != train_checksum)
      throw std::logic_error("pretokenized train split changed between iterations");

    // (1) segment the original train split with V_t
    const auto seg_src = bpe::segment_corpus(tables.source, train_src);
    const auto seg_trg = bpe::segment_corpus(tables.target, train_trg);
    const auto combined = combine(seg_src, seg_trg);
    const auto vocab = bpe::realized_vocabulary(combined);
    const auto stats = metrics::corpus_entropy(vocab);

    // (2) train M_t from scratch
    translator::LexiconModel model;
    Translator translate_batch;
    translate_batch.work_dir = options.artifact_dir.empty()
                                   ? fs::temp_directory_path().string()
                                   : options.artifact_dir;
    if (const auto *toy = std::get_if<ToyModelConfig>(&config.model)) {
      model = translator::train_toy(seg_src.lines, seg_trg.lines, toy->em_iterations, toy->alpha,
                                    config.base_seed + static_cast<std::uint64_t>(t));
      translate_batch.toy = &model;
    } else {
      translate_batch.external = &std::get<ExternalModelConfig>(config.model);
    }

    // dev/test scoring under V_t
    const auto dev_seg = bpe::segment_corpus(tables.source, dev_src);
    const auto dev_hyp = detokenize_lines(translate_batch(dev_seg.lines));
    const double dev_bleu = eval::corpus_bleu(dev_hyp, dev_trg).score;

    const auto test_seg = bpe::segment_corpus(tables.source, test_src);
    const auto test_out = translate_batch(test_seg.lines);
    const auto test_hyp = detokenize_lines(test_out);
    const double test_bleu = eval::corpus_bleu(test_hyp, test_trg).score;

    bpe::SegmentedCorpus inference;
    inference.lines = test_out;
    inference.table_id = tables.target.id();
    const auto inference_vocab = bpe::realized_vocabulary(inference);
    const auto test_vocab =
        bpe::realized_vocabulary(bpe::segment_corpus(tables.target, test_trg));
    const double vc = metrics::vocab_compression(inference_vocab, test_vocab);

    IterationRecord record;
    record.iteration = t;
    record.vocab_size = vocab.size();
    record.entropy = stats.entropy;
    record.ttr_scaled = stats.ttr_scaled;
    record.dev_bleu = dev_bleu;
    record.test_bleu = test_bleu;
    record.vocab_compression = vc;
    if (t > 0) {
      record.vocab_shift = metrics::vocab_shift(stats.entropy, prev_entropy, prev_vocab.size());
      record.overlap_pct = metrics::overlap_percent(vocab, prev_vocab);
    }
    dev_history.push_back(dev_bleu);

    write_iteration_artifacts(options.artifact_dir, t, config, tables, vocab);

    record.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report.iterations.push_back(record);

    if (options.progress != nullptr) {
      char overlap_buf[16] = "-";
      if (record.overlap_pct)
        std::snprintf(overlap_buf, sizeof(overlap_buf), "%.2f", *record.overlap_pct);
      char line[128];
      std::snprintf(line, sizeof(line), "%5d %7zu %8.4f %9s %9.2f\n", t, record.vocab_size,
                    record.entropy, overlap_buf, record.dev_bleu);
      *options.progress << line;
      options.progress->flush();
    }

    const StopDecision decision = converged(dev_history, report.iterations, config);
    if (decision.stop) {
      report.stop_reason = decision.reason;
      break;
    }
    if (t + 1 >= config.max_iterations) {
      report.stop_reason = StopReason::max_iterations;
      break;
    }

    // (3) pseudo corpus from the train sources, (4) relearn V_{t+1}
    const auto pseudo_out = translate_batch(seg_src.lines);
    ParallelCorpus pseudo;
    pseudo.name = "pseudo";
    pseudo.pairs.resize(seg_src.lines.size());
    for (std::size_t i = 0; i < seg_src.lines.size(); ++i) {
      pseudo.pairs[i].source = join_words(bpe::detokenize(seg_src.lines[i]));
      pseudo.pairs[i].target = join_words(bpe::detokenize(pseudo_out[i]));
    }
    const auto pseudo_src = pretokenize_sources(pseudo);
    const auto pseudo_trg = pretokenize_targets(pseudo);
    tables = relearn(config, initial_tables, pseudo_src, pseudo_trg);

    prev_vocab = vocab;
    prev_entropy = stats.entropy;
    } catch (const Error &e) {
      throw LoopError("iteration " + std::to_string(t) + " failed: " + e.what(), report);
    }
  }
  return report;
}

namespace {

json config_to_json(const RunConfig &config) {
  json j;
  j["target_merges"] = config.target_merges;
  j["max_iterations"] = config.max_iterations;
  j["bleu_epsilon"] = config.bleu_epsilon;
  j["overlap_stop"] = config.overlap_stop;
  j["base_seed"] = config.base_seed;
  j["joint_bpe"] = config.joint_bpe;
  if (const auto *toy = std::get_if<ToyModelConfig>(&config.model)) {
    j["model"] = {{"type", "toy"},
                  {"em_iterations", toy->em_iterations},
                  {"alpha", toy->alpha}};
  } else {
    const auto &ext = std::get<ExternalModelConfig>(config.model);
    j["model"] = {{"type", "external"}, {"command", ext.command_template}};
  }
  return j;
}

RunConfig config_from_json(const json &j) {
  RunConfig config;
  config.target_merges = j.at("target_merges").get<std::size_t>();
  config.max_iterations = j.at("max_iterations").get<int>();
  config.bleu_epsilon = j.at("bleu_epsilon").get<double>();
  config.overlap_stop = j.at("overlap_stop").get<double>();
  config.base_seed = j.at("base_seed").get<std::uint64_t>();
  config.joint_bpe = j.at("joint_bpe").get<bool>();
  const auto &model = j.at("model");
  const auto type = model.at("type").get<std::string>();
  if (type == "toy") {
    ToyModelConfig toy;
    toy.em_iterations = model.at("em_iterations").get<int>();
    toy.alpha = model.at("alpha").get<double>();
    config.model = toy;
  } else if (type == "external") {
    config.model = ExternalModelConfig{model.at("command").get<std::string>()};
  } else {
    throw FormatError("unknown model type: " + type);
  }
  return config;
}

json record_to_json(const IterationRecord &record) {
  json j;
  j["t"] = record.iteration;
  j["vocab_size"] = record.vocab_size;
  j["entropy"] = record.entropy;
  j["shift"] = record.vocab_shift ? json(*record.vocab_shift) : json(nullptr);
  j["overlap_pct"] = record.overlap_pct ? json(*record.overlap_pct) : json(nullptr);
  j["ttr_scaled"] = record.ttr_scaled;
  j["dev_bleu"] = record.dev_bleu;
  j["test_bleu"] = record.test_bleu;
  j["vc"] = record.vocab_compression;
  j["wall_time_s"] = record.wall_time_s;
  return j;
}

} // namespace

std::string report_to_json(const RunReport &report) {
  json j;
  j["schema"] = "selfvocab-report v1";
  j["config"] = config_to_json(report.config);
  j["iterations"] = json::array();
  for (const auto &record : report.iterations) j["iterations"].push_back(record_to_json(record));
  j["stop_reason"] = stop_reason_name(report.stop_reason);
  return j.dump(2) + "\n";
}

std::string partial_report_to_json(const RunReport &report, const std::string &error) {
  json j;
  j["schema"] = "selfvocab-report v1";
  j["config"] = config_to_json(report.config);
  j["iterations"] = json::array();
  for (const auto &record : report.iterations) j["iterations"].push_back(record_to_json(record));
  j["error"] = error;
  return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string &json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != "selfvocab-report v1")
    throw FormatError("not a selfvocab-report v1 document");

  RunReport report;
  report.config = config_from_json(j.at("config"));
  if (!j.contains("iterations") || !j.at("iterations").is_array() || j.at("iterations").empty())
    throw FormatError("report has no iteration records");
  for (const auto &rec : j.at("iterations")) {
    IterationRecord record;
    record.iteration = rec.at("t").get<int>();
    record.vocab_size = rec.at("vocab_size").get<std::size_t>();
    record.entropy = rec.at("entropy").get<double>();
    if (!rec.at("shift").is_null()) record.vocab_shift = rec.at("shift").get<double>();
    if (!rec.at("overlap_pct").is_null())
      record.overlap_pct = rec.at("overlap_pct").get<double>();
    record.ttr_scaled = rec.at("ttr_scaled").get<double>();
    record.dev_bleu = rec.at("dev_bleu").get<double>();
    record.test_bleu = rec.at("test_bleu").get<double>();
    record.vocab_compression = rec.at("vc").get<double>();
    record.wall_time_s = rec.at("wall_time_s").get<double>();
    report.iterations.push_back(record);
  }
  const auto reason = j.at("stop_reason").get<std::string>();
  if (reason == "max_iterations") {
    report.stop_reason = StopReason::max_iterations;
  } else if (reason == "bleu_converged") {
    report.stop_reason = StopReason::bleu_converged;
  } else if (reason == "overlap_converged") {
    report.stop_reason = StopReason::overlap_converged;
  } else {
    throw FormatError("unknown stop_reason: " + reason);
  }
  return report;
}

std::string report_to_csv(const RunReport &report) {
  std::string csv = "t,vocab_size,entropy,shift,overlap_pct,ttr_scaled,dev_bleu,test_bleu,vc,"
                    "wall_time_s\n";
  for (const auto &r : report.iterations) {
    csv += std::to_string(r.iteration);
    csv += ',' + std::to_string(r.vocab_size);
    csv += ',' + format_double(r.entropy);
    csv += ',';
    if (r.vocab_shift) csv += format_double(*r.vocab_shift);
    csv += ',';
    if (r.overlap_pct) csv += format_double(*r.overlap_pct);
    csv += ',' + format_double(r.ttr_scaled);
    csv += ',' + format_double(r.dev_bleu);
    csv += ',' + format_double(r.test_bleu);
    csv += ',' + format_double(r.vocab_compression);
    csv += ',' + format_double(r.wall_time_s);
    csv += '\n';
  }
  return csv;
}

std::vector<std::pair<std::string, std::string>> plot_series(const RunReport &report) {
  std::vector<std::pair<std::string, std::string>> series;
  auto add = [&](const std::string &name, auto value_of, bool optional_metric) {
    std::string csv = "t,value\n";
    for (const auto &record : report.iterations) {
      const auto value = value_of(record);
      if (optional_metric && !value.has_value()) continue;
      csv += std::to_string(record.iteration) + ',' + format_double(*value) + '\n';
    }
    series.emplace_back(name, std::move(csv));
  };
  using Opt = std::optional<double>;
  add("vocab_size", [](const IterationRecord &r) {
    return Opt(static_cast<double>(r.vocab_size)); }, false);
  add("entropy", [](const IterationRecord &r) { return Opt(r.entropy); }, false);
  add("overlap", [](const IterationRecord &r) { return r.overlap_pct; }, true);
  add("ttr", [](const IterationRecord &r) { return Opt(r.ttr_scaled); }, false);
  add("bleu", [](const IterationRecord &r) { return Opt(r.test_bleu); }, false);
  add("vc", [](const IterationRecord &r) { return Opt(r.vocab_compression); }, false);
  return series;
}

namespace {

const char *kSpecKeys[] = {"train_source", "train_target", "dev_source", "dev_target",
                           "test_source",  "test_target",  "output_dir"};
const char *kConfigKeys[] = {"target_merges", "max_iterations", "bleu_epsilon", "overlap_stop",
                             "base_seed",     "joint_bpe",      "model"};
const char *kToyModelKeys[] = {"type", "em_iterations", "alpha"};
const char *kExternalModelKeys[] = {"type", "command"};

template <std::size_t N> bool known(const std::string &key, const char *(&keys)[N]) {
  for (const auto *k : keys) {
    if (key == k) return true;
  }
  return false;
}

} // namespace

RunSpec load_run_spec(const std::string &config_path) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + config_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw FormatError(config_path + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw FormatError(config_path + ": config must be a JSON object");

  for (const auto &[key, value] : j.items()) {
    if (!known(key, kSpecKeys) && !known(key, kConfigKeys))
      throw UsageError(config_path + ": unknown config key \"" + key + "\"");
  }
  if (j.contains("model")) {
    const auto &model = j.at("model");
    if (!model.is_object() || !model.contains("type"))
      throw UsageError(config_path + ": model must be an object with a \"type\" key");
    const auto type = model.at("type").get<std::string>();
    for (const auto &[key, value] : model.items()) {
      const bool ok = type == "toy" ? known(key, kToyModelKeys) : known(key, kExternalModelKeys);
      if (!ok) throw UsageError(config_path + ": unknown model key \"" + key + "\"");
    }
  }

  RunSpec spec;
  try {
    for (const auto *key : kSpecKeys) {
      if (key != std::string("output_dir") && !j.contains(key))
        throw UsageError(config_path + ": missing required key \"" + std::string(key) + "\"");
    }
    spec.train_source = j.at("train_source").get<std::string>();
    spec.train_target = j.at("train_target").get<std::string>();
    spec.dev_source = j.at("dev_source").get<std::string>();
    spec.dev_target = j.at("dev_target").get<std::string>();
    spec.test_source = j.at("test_source").get<std::string>();
    spec.test_target = j.at("test_target").get<std::string>();
    spec.output_dir = j.value("output_dir", "out");

    if (j.contains("target_merges")) spec.config.target_merges = j.at("target_merges").get<std::size_t>();
    if (j.contains("max_iterations")) spec.config.max_iterations = j.at("max_iterations").get<int>();
    if (j.contains("bleu_epsilon")) spec.config.bleu_epsilon = j.at("bleu_epsilon").get<double>();
    if (j.contains("overlap_stop")) spec.config.overlap_stop = j.at("overlap_stop").get<double>();
    if (j.contains("base_seed")) spec.config.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("joint_bpe")) spec.config.joint_bpe = j.at("joint_bpe").get<bool>();
    if (j.contains("model")) {
      const auto &model = j.at("model");
      const auto type = model.at("type").get<std::string>();
      if (type == "toy") {
        ToyModelConfig toy;
        if (model.contains("em_iterations")) toy.em_iterations = model.at("em_iterations").get<int>();
        if (model.contains("alpha")) toy.alpha = model.at("alpha").get<double>();
        spec.config.model = toy;
      } else if (type == "external") {
        spec.config.model = ExternalModelConfig{model.at("command").get<std::string>()};
      } else {
        throw UsageError(config_path + ": unknown model type \"" + type + "\"");
      }
    }
  } catch (const json::exception &e) {
    throw UsageError(config_path + ": invalid config value: " + e.what());
  }

  try {
    spec.config.validate();
  } catch (const DomainError &e) {
    throw UsageError(config_path + ": " + e.what());
  }

  // relative data paths resolve against the config file's directory
  const fs::path base = fs::path(config_path).parent_path();
  auto resolve = [&](std::string &path) {
    if (!path.empty() && fs::path(path).is_relative()) path = (base / path).string();
  };
  resolve(spec.train_source);
  resolve(spec.train_target);
  resolve(spec.dev_source);
  resolve(spec.dev_target);
  resolve(spec.test_source);
  resolve(spec.test_target);
  return spec;
}

} // namespace selfvocab::loop
