#include "selfvocab/translator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "selfvocab/bpe.hpp"
#include "selfvocab/errors.hpp"
#include "selfvocab/parallel.hpp"

namespace selfvocab::translator {

namespace {

std::uint64_t bigram_key(std::uint32_t context, std::uint32_t target) {
  return (static_cast<std::uint64_t>(context) << 32) | target;
}

struct IdCorpus {
  std::vector<std::vector<std::uint32_t>> src;
  std::vector<std::vector<std::uint32_t>> trg;
};

std::uint32_t intern(std::vector<std::string> &types,
                     std::unordered_map<std::string, std::uint32_t> &ids, const std::string &s) {
  auto it = ids.find(s);
  if (it != ids.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(types.size());
  types.push_back(s);
  ids.emplace(s, id);
  return id;
}

} // namespace

double LexiconModel::translation_prob(const std::string &source, const std::string &target) const {
  auto sit = src_ids_.find(source);
  auto tit = trg_ids_.find(target);
  if (sit == src_ids_.end() || tit == trg_ids_.end()) return 0.0;
  for (const auto &[tid, prob] : translation_[sit->second]) {
    if (tid == tit->second) return prob;
  }
  return 0.0;
}

double LexiconModel::bigram_prob(const std::string &prev, const std::string &target) const {
  std::uint32_t context = 0;
  if (!prev.empty()) {
    auto it = trg_ids_.find(prev);
    // an unseen context has zero observed counts; the formula still applies
    context = it == trg_ids_.end() ? static_cast<std::uint32_t>(trg_types_.size() + 1)
                                   : it->second + 1;
  }
  std::uint64_t pair_count = 0;
  std::uint64_t context_total = 0;
  if (context < context_totals_.size()) {
    context_total = context_totals_[context];
    auto tit = trg_ids_.find(target);
    if (tit != trg_ids_.end()) {
      auto it = bigram_counts_.find(bigram_key(context, tit->second));
      if (it != bigram_counts_.end()) pair_count = it->second;
    }
  }
  const double vocab = static_cast<double>(trg_types_.size()) + 1.0; // observed + unknown bucket
  return (static_cast<double>(pair_count) + alpha_) /
         (static_cast<double>(context_total) + alpha_ * vocab);
}

const std::string &LexiconModel::fallback_token() const {
  if (!trained_) throw ModelStateError("model is not trained");
  return trg_types_[fallback_];
}

LexiconModel train_toy(std::span<const std::vector<std::string>> source_lines,
                       std::span<const std::vector<std::string>> target_lines, int em_iterations,
                       double alpha, std::uint64_t seed) {
  if (source_lines.size() != target_lines.size()) {
    throw AlignmentError("source and target line counts differ: " +
                         std::to_string(source_lines.size()) + " vs " +
                         std::to_string(target_lines.size()));
  }
  if (source_lines.empty()) throw EmptyInputError("cannot train on an empty corpus");
  if (em_iterations < 1) throw DomainError("em_iterations must be at least 1");

  LexiconModel model;
  model.alpha_ = alpha;
  model.seed_ = seed;

  IdCorpus corpus;
  corpus.src.resize(source_lines.size());
  corpus.trg.resize(target_lines.size());
  std::uint64_t src_tokens = 0, trg_tokens = 0;
  for (std::size_t li = 0; li < source_lines.size(); ++li) {
    if (source_lines[li].empty() || target_lines[li].empty())
      throw EmptyInputError("training line " + std::to_string(li + 1) + " has an empty side");
    for (const auto &tok : source_lines[li])
      corpus.src[li].push_back(intern(model.src_types_, model.src_ids_, tok));
    for (const auto &tok : target_lines[li])
      corpus.trg[li].push_back(intern(model.trg_types_, model.trg_ids_, tok));
    src_tokens += source_lines[li].size();
    trg_tokens += target_lines[li].size();
  }
  model.length_ratio_ = static_cast<double>(trg_tokens) / static_cast<double>(src_tokens);

  // Candidate sets: every target type co-occurring with the source type,
  // sorted by target string byte order so argmax ties resolve by byte order.
  const std::size_t n_src = model.src_types_.size();
  std::vector<std::vector<std::uint32_t>> candidates(n_src);
  {
    std::vector<std::unordered_map<std::uint32_t, std::uint32_t>> cand_index(n_src);
    for (std::size_t li = 0; li < corpus.src.size(); ++li) {
      for (const auto sid : corpus.src[li]) {
        auto &index = cand_index[sid];
        for (const auto tid : corpus.trg[li]) {
          if (index.emplace(tid, 0).second) candidates[sid].push_back(tid);
        }
      }
    }
    for (std::size_t sid = 0; sid < n_src; ++sid) {
      std::sort(candidates[sid].begin(), candidates[sid].end(),
                [&](std::uint32_t a, std::uint32_t b) {
                  return model.trg_types_[a] < model.trg_types_[b];
                });
      auto &index = cand_index[sid];
      index.clear();
      for (std::uint32_t k = 0; k < candidates[sid].size(); ++k)
        index.emplace(candidates[sid][k], k);
    }

    // probs[sid][k] aligned with candidates[sid]
    std::vector<std::vector<double>> probs(n_src);
    for (std::size_t sid = 0; sid < n_src; ++sid) {
      probs[sid].assign(candidates[sid].size(),
                        1.0 / static_cast<double>(candidates[sid].size()));
    }

    const std::size_t nlines = corpus.src.size();
    const std::size_t nblocks = par::block_count(nlines);

    struct BlockPartial {
      std::unordered_map<std::uint64_t, double> counts; // (sid, cand slot) -> expected count
      double log_likelihood = 0.0;
    };

    for (int round = 0; round < em_iterations; ++round) {
      std::vector<BlockPartial> partials(nblocks);
      par::for_each_block(nlines, [&](std::size_t bi, std::size_t begin, std::size_t end) {
        auto &partial = partials[bi];
        for (std::size_t li = begin; li < end; ++li) {
          const auto &src = corpus.src[li];
          const auto &trg = corpus.trg[li];
          for (const auto tid : trg) {
            double denom = 0.0;
            for (const auto sid : src) {
              auto it = cand_index[sid].find(tid);
              if (it != cand_index[sid].end()) denom += probs[sid][it->second];
            }
            partial.log_likelihood +=
                std::log(denom / static_cast<double>(src.size()));
            for (const auto sid : src) {
              auto it = cand_index[sid].find(tid);
              if (it == cand_index[sid].end()) continue;
              const double gamma = probs[sid][it->second] / denom;
              partial.counts[bigram_key(static_cast<std::uint32_t>(sid), it->second)] += gamma;
            }
          }
        }
      });

      // Fold block partials in block order: the floating-point sums are then
      // independent of the thread count.
      std::unordered_map<std::uint64_t, double> counts;
      double ll = 0.0;
      for (const auto &partial : partials) {
        ll += partial.log_likelihood;
        for (const auto &[key, value] : partial.counts) counts[key] += value;
      }
      model.ll_history_.push_back(ll);

      for (std::size_t sid = 0; sid < n_src; ++sid) {
        auto &p = probs[sid];
        double total = 0.0;
        for (std::uint32_t k = 0; k < p.size(); ++k) {
          auto it = counts.find(bigram_key(static_cast<std::uint32_t>(sid), k));
          p[k] = it == counts.end() ? 0.0 : it->second;
          total += p[k];
        }
        if (total > 0) {
          for (auto &v : p) v /= total;
        } else {
          std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
        }
      }
    }

    model.translation_.resize(n_src);
    for (std::size_t sid = 0; sid < n_src; ++sid) {
      auto &row = model.translation_[sid];
      row.reserve(candidates[sid].size());
      for (std::uint32_t k = 0; k < candidates[sid].size(); ++k)
        row.emplace_back(candidates[sid][k], probs[sid][k]);
    }
  }

  // Bigram counts over target lines; context 0 is the line start.
  model.context_totals_.assign(model.trg_types_.size() + 1, 0);
  std::vector<std::uint64_t> type_totals(model.trg_types_.size(), 0);
  for (const auto &trg : corpus.trg) {
    std::uint32_t context = 0;
    for (const auto tid : trg) {
      ++model.bigram_counts_[bigram_key(context, tid)];
      ++model.context_totals_[context];
      ++type_totals[tid];
      context = tid + 1;
    }
  }

  // Fallback: globally most frequent target type, ties by byte order.
  std::uint32_t best = 0;
  for (std::uint32_t tid = 1; tid < type_totals.size(); ++tid) {
    if (type_totals[tid] > type_totals[best] ||
        (type_totals[tid] == type_totals[best] &&
         model.trg_types_[tid] < model.trg_types_[best])) {
      best = tid;
    }
  }
  model.fallback_ = best;
  model.trained_ = true;
  return model;
}

std::vector<std::string> translate(const LexiconModel &model,
                                   std::span<const std::string> source_line) {
  if (!model.trained_) throw ModelStateError("model is not trained");
  if (source_line.empty()) throw EmptyInputError("cannot translate an empty line");

  const auto n = static_cast<double>(source_line.size());
  auto length = static_cast<std::size_t>(std::llround(model.length_ratio_ * n));
  length = std::clamp<std::size_t>(length, 1, 2 * source_line.size());

  std::vector<std::string> output;
  output.reserve(length);
  std::string prev; // empty = line start
  for (std::size_t j = 0; j < length; ++j) {
    auto src_pos = static_cast<std::size_t>(
        std::floor(static_cast<double>(j) / model.length_ratio_));
    src_pos = std::min(src_pos, source_line.size() - 1);

    const std::uint32_t chosen = [&]() -> std::uint32_t {
      auto sit = model.src_ids_.find(source_line[src_pos]);
      if (sit == model.src_ids_.end()) return model.fallback_;
      const auto &row = model.translation_[sit->second];
      bool found = false;
      std::uint32_t best = model.fallback_;
      double best_score = 0.0;
      // candidates are byte-order sorted, so keeping the first strict maximum
      // breaks ties toward the smallest string
      for (const auto &[tid, tprob] : row) {
        if (tprob <= 0.0) continue;
        const double score = tprob * model.bigram_prob(prev, model.trg_types_[tid]);
        if (!found || score > best_score) {
          found = true;
          best = tid;
          best_score = score;
        }
      }
      return found ? best : model.fallback_;
    }();

    output.push_back(model.trg_types_[chosen]);
    prev = model.trg_types_[chosen];
  }
  return output;
}

std::vector<std::vector<std::string>> translate_lines(
    const LexiconModel &model, std::span<const std::vector<std::string>> source_lines) {
  std::vector<std::vector<std::string>> out(source_lines.size());
  par::for_each_index(source_lines.size(),
                      [&](std::size_t i) { out[i] = translate(model, source_lines[i]); });
  return out;
}

namespace {

std::string join_words(const std::vector<std::string> &words) {
  std::string line;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) line += ' ';
    line += words[i];
  }
  return line;
}

} // namespace

ParallelCorpus generate_pseudo(const LexiconModel &model,
                               std::span<const std::vector<std::string>> source_lines) {
  const auto hypotheses = translate_lines(model, source_lines);
  ParallelCorpus pseudo;
  pseudo.name = "pseudo";
  pseudo.pairs.resize(source_lines.size());
  par::for_each_index(source_lines.size(), [&](std::size_t i) {
    pseudo.pairs[i].source = join_words(bpe::detokenize(source_lines[i]));
    pseudo.pairs[i].target = join_words(bpe::detokenize(hypotheses[i]));
  });
  return pseudo;
}

namespace {

void replace_all(std::string &text, const std::string &from, const std::string &to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

} // namespace

std::vector<std::vector<std::string>> external_translate(
    const std::string &command_template, const std::string &sources_path,
    const std::string &output_path, std::span<const std::vector<std::string>> source_lines) {
  if (command_template.find("{in}") == std::string::npos ||
      command_template.find("{out}") == std::string::npos) {
    throw DomainError("command template must contain {in} and {out} placeholders");
  }

  {
    std::ofstream out(sources_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + sources_path);
    for (const auto &line : source_lines) out << join_words(line) << '\n';
  }

  std::string command = command_template;
  replace_all(command, "{in}", std::filesystem::absolute(sources_path).string());
  replace_all(command, "{out}", std::filesystem::absolute(output_path).string());

  std::string diagnostics;
  FILE *pipe = ::popen((command + " 2>&1").c_str(), "r");
  if (pipe == nullptr) throw SubprocessError("failed to launch: " + command);
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0) diagnostics.append(buf, got);
  const int status = ::pclose(pipe);
  if (status != 0) {
    throw SubprocessError("external command failed (status " + std::to_string(status) +
                          "): " + command + "\n" + diagnostics);
  }

  std::ifstream in(output_path, std::ios::binary);
  if (!in) throw IoError("external command produced no output file " + output_path);
  std::vector<std::vector<std::string>> hypotheses;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start < line.size()) {
      const std::size_t space = line.find(' ', start);
      const std::size_t end = space == std::string::npos ? line.size() : space;
      if (end > start) tokens.push_back(line.substr(start, end - start));
      start = end + 1;
    }
    hypotheses.push_back(std::move(tokens));
  }
  if (hypotheses.size() != source_lines.size()) {
    throw AlignmentError("external model wrote " + std::to_string(hypotheses.size()) +
                         " lines for " + std::to_string(source_lines.size()) + " sources");
  }
  return hypotheses;
}

} // namespace selfvocab::translator
