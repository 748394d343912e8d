#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "selfvocab/corpus.hpp"
#include "selfvocab/errors.hpp"

namespace selfvocab::loop {

struct ToyModelConfig {
  int em_iterations = 10;
  double alpha = 0.1;

  bool operator==(const ToyModelConfig &) const = default;
};

struct ExternalModelConfig {
  std::string command_template; // must contain {in} and {out}

  bool operator==(const ExternalModelConfig &) const = default;
};

struct RunConfig {
  std::size_t target_merges = 10000;
  int max_iterations = 10;
  double bleu_epsilon = 0.1;  // minimum dev-BLEU gain to continue
  double overlap_stop = 99.0; // stop once consecutive overlap reaches this
  std::uint64_t base_seed = 0;
  bool joint_bpe = true;
  std::variant<ToyModelConfig, ExternalModelConfig> model = ToyModelConfig{};

  void validate() const; // throws DomainError on out-of-range values
  bool operator==(const RunConfig &) const = default;
};

enum class StopReason { max_iterations, bleu_converged, overlap_converged };

const char *stop_reason_name(StopReason reason);

// One row of the per-iteration report. Record 0 carries no shift/overlap.
struct IterationRecord {
  int iteration = 0;
  std::size_t vocab_size = 0;
  double entropy = 0.0;
  std::optional<double> vocab_shift;
  std::optional<double> overlap_pct;
  double ttr_scaled = 0.0;
  double dev_bleu = 0.0;
  double test_bleu = 0.0;
  double vocab_compression = 0.0;
  double wall_time_s = 0.0;
};

struct RunReport {
  RunConfig config;
  std::vector<IterationRecord> iterations; // contiguous from t = 0
  StopReason stop_reason = StopReason::max_iterations;
};

struct RunOptions {
  // When non-empty, per-iteration artifacts (iterNNN.merges, iterNNN.vocab)
  // and external-adapter work files are written here.
  std::string artifact_dir;
  // Progress table target; null silences progress output.
  std::ostream *progress = nullptr;
};

// Raised when an iteration fails mid-run; carries the completed records so
// callers can flush a partial report.
class LoopError : public Error {
public:
  LoopError(const std::string &msg, RunReport partial)
      : Error(msg), partial_report(std::move(partial)) {}

  RunReport partial_report;
};

// Runs self-vocabularizing training: iteration 0 learns the vocabulary from
// the original train split; every iteration segments the original train data
// with the current vocabulary, trains the model from scratch (seed base_seed
// + t), translates the train sources into a pseudo corpus and relearns the
// vocabulary from it. Stops on max_iterations, a dev-BLEU gain below
// bleu_epsilon, or consecutive-vocabulary overlap reaching overlap_stop.
RunReport run_self_vocab(const RunConfig &config, const ParallelCorpus &train,
                         const ParallelCorpus &dev, const ParallelCorpus &test,
                         const RunOptions &options = {});

struct StopDecision {
  bool stop = false;
  StopReason reason = StopReason::max_iterations;
};

// Convergence rule applied after each recorded iteration: BLEU gain below
// epsilon wins over the overlap threshold; neither fires before t = 1.
StopDecision converged(std::span<const double> dev_bleu_history,
                       std::span<const IterationRecord> records, const RunConfig &config);

// Report serialization ("selfvocab-report v1"). JSON is the archival format;
// the CSV mirrors the iteration table with header
// t,vocab_size,entropy,shift,overlap_pct,ttr_scaled,dev_bleu,test_bleu,vc,wall_time_s.
std::string report_to_json(const RunReport &report);
RunReport report_from_json(const std::string &json_text);
std::string report_to_csv(const RunReport &report);

// Diagnostic document for an aborted run: completed records plus the error,
// no stop_reason. Not parseable by report_from_json.
std::string partial_report_to_json(const RunReport &report, const std::string &error);

// Two-column (t,value) CSV per metric series, for plotting. Series:
// vocab_size, entropy, overlap, ttr, bleu (test), vc. Rows with absent
// values are skipped.
std::vector<std::pair<std::string, std::string>> plot_series(const RunReport &report);

// A full run configuration as read from a JSON config file: the RunConfig
// plus data paths. Unknown keys are rejected by name.
struct RunSpec {
  RunConfig config;
  std::string train_source, train_target;
  std::string dev_source, dev_target;
  std::string test_source, test_target;
  std::string output_dir;
};

// Parses a config file; relative data paths resolve against the config
// file's directory. Throws UsageError on unknown keys or invalid values.
RunSpec load_run_spec(const std::string &config_path);

} // namespace selfvocab::loop
