#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "docgen/corpus.hpp"
#include "docgen/decode.hpp"
#include "docgen/docstore.hpp"
#include "docgen/metrics.hpp"
#include "docgen/model.hpp"

namespace docgen::evaltrain {

enum class DocMode { kNone, kOracle, kRetrieved };

std::string to_string(DocMode mode);
DocMode doc_mode_from_string(const std::string& s);

struct TrainConfig {
  int batch_size = 64;
  int epochs = 100;
  int patience = 20;
  double lr = 0.001;
  double weight_decay = 0.01;
  bool decoupled_weight_decay = true;
  std::uint64_t seed = 1;
  DocMode train_doc_mode = DocMode::kOracle;
  DocMode eval_doc_mode = DocMode::kOracle;
  int vocab_min_freq = 1;
  int epoch_eval_beam = 1;  // per-epoch model selection decodes greedily
  std::string nl_embeddings_path;  // optional word2vec-style text file
  model::ModelConfig model;

  void validate() const;
};

// Resolves the signature-description pairs an example sees.
class DocProvider {
 public:
  DocProvider(DocMode mode, const docstore::DocumentSet* docs, const docstore::TfIdfIndex* index,
              int k);

  std::vector<docstore::ApiEntry> entries_for(const corpus::Example& example) const;
  std::vector<std::string> keys_for(const corpus::Example& example) const;
  DocMode mode() const { return mode_; }

 private:
  DocMode mode_;
  const docstore::DocumentSet* docs_;
  const docstore::TfIdfIndex* index_;
  int k_;
};

// Stops after `patience` consecutive epochs without a dev improvement.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}

  // Returns true when training should stop after this epoch.
  bool update(int epoch, double score);
  bool improved() const { return since_best_ == 0; }
  int best_epoch() const { return best_epoch_; }
  double best_score() const { return best_score_; }

 private:
  int patience_;
  int best_epoch_ = 0;
  double best_score_ = -1.0;
  int since_best_ = 0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_bleu = 0.0;
  double elapsed_s = 0.0;
};

struct TrainResult {
  std::unique_ptr<model::ModelParams> params;  // best-dev weights
  int best_epoch = 0;
  double best_dev_bleu = 0.0;
  std::vector<EpochLog> log;
  nlohmann::json checkpoint_meta;
};

// Cross-entropy training with seeded shuffling, Adam updates, per-epoch dev
// BLEU, and patience-based early stopping; returns the best-dev weights.
// The natural-language vocabulary covers the train intents plus every
// description in `doc_set` when one is supplied (the document set is an
// input resource, so unseen-library words keep usable embeddings).
// `epoch_stream`, when set, receives one JSON line per epoch (elapsed time
// included only when log_timings is set, so logs stay reproducible).
TrainResult train(const std::vector<corpus::Example>& dataset,
                  const corpus::SplitManifest& manifest, const DocProvider& train_docs,
                  const DocProvider& eval_docs, const TrainConfig& config,
                  std::ostream* epoch_stream = nullptr, bool log_timings = false,
                  const docstore::DocumentSet* doc_set = nullptr);

enum class Setting { kBaseline, kOracle, kPartial };

std::string to_string(Setting setting);
Setting setting_from_string(const std::string& s);

struct PerExampleRecord {
  std::string id;
  std::string hypothesis;
  std::string reference;
  std::vector<std::string> hyp_tokens;
  std::vector<std::string> ref_tokens;
  std::vector<std::string> retrieved_keys;
  std::vector<std::string> copied_oov;  // OOV gold tokens the model produced
};

struct EvalReport {
  std::string split_name;
  std::string setting;
  double bleu = 0.0;
  double oov_recall_pct = 0.0;
  int oov_found = 0;
  int oov_total = 0;
  std::vector<PerExampleRecord> records;

  nlohmann::json to_json() const;
  std::string side_by_side(const std::vector<corpus::Example>& dataset) const;
};

EvalReport evaluate_split(model::ModelParams& params, const std::vector<corpus::Example>& dataset,
                          const std::vector<std::string>& split_ids, const std::string& split_name,
                          const DocProvider& docs, int beam_size, const std::string& setting_name);

struct ExperimentResult {
  TrainResult train;
  EvalReport dev;
  EvalReport test;
};

// Trains under the given setting and decodes dev and test with beam search.
// Partial mode needs a fitted index; baseline sees no documents anywhere.
ExperimentResult run_experiment(const std::vector<corpus::Example>& dataset,
                                const corpus::SplitManifest& manifest,
                                const docstore::DocumentSet* docs,
                                const docstore::TfIdfIndex* index, Setting setting,
                                TrainConfig config, int eval_beam = -1,
                                std::ostream* epoch_stream = nullptr, bool log_timings = false);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace docgen::evaltrain
