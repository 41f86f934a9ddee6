// docgen: documentation-grounded code generation pipeline.
//
// Subcommands cover the whole workflow: synthetic corpus generation, document
// ingestion, dataset splitting and statistics, retriever fitting/evaluation,
// model training, decoding, experiment runs, and an interactive query loop.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "docgen/corpus.hpp"
#include "docgen/decode.hpp"
#include "docgen/docstore.hpp"
#include "docgen/metrics.hpp"
#include "docgen/model_io.hpp"
#include "docgen/synthetic.hpp"
#include "docgen/train.hpp"

namespace fs = std::filesystem;
using namespace docgen;

namespace {

void write_text(const std::string& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << content;
}

std::vector<corpus::Example> select_split(const std::vector<corpus::Example>& dataset,
                                          const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const corpus::Example*> by_id;
  for (const corpus::Example& ex : dataset) by_id[ex.id] = &ex;
  std::vector<corpus::Example> out;
  for (const std::string& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw std::runtime_error("manifest id not in dataset: " + id);
    out.push_back(*it->second);
  }
  return out;
}

const std::vector<std::string>& split_ids(const corpus::SplitManifest& manifest,
                                          const std::string& name) {
  if (name == "train") return manifest.train;
  if (name == "dev") return manifest.dev;
  if (name == "test") return manifest.test;
  throw std::runtime_error("unknown split name: " + name + " (use train, dev, or test)");
}

// Flags shared by `train` and `experiment`.
struct TrainCli {
  evaltrain::TrainConfig config;
  std::string train_doc_mode = "oracle";
  bool timings = false;
  CLI::Option* hidden_opt = nullptr;
  CLI::Option* dropout_opt = nullptr;

  // The grid's best differ by setting; apply them unless the user chose.
  void apply_setting_defaults(evaltrain::Setting setting) {
    if (setting == evaltrain::Setting::kPartial && hidden_opt && hidden_opt->count() == 0) {
      config.model.encoder_hidden = 128;
    }
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--epochs", config.epochs, "Training epochs");
    cmd->add_option("--patience", config.patience, "Early-stopping patience (epochs)");
    cmd->add_option("--batch", config.batch_size, "Batch size");
    cmd->add_option("--lr", config.lr, "Adam learning rate");
    cmd->add_option("--weight-decay", config.weight_decay, "Decoupled weight decay");
    cmd->add_flag("--coupled-decay{false}", config.decoupled_weight_decay,
                  "Fold the decay term into the gradient instead of decoupling it");
    cmd->add_option("--min-freq", config.vocab_min_freq, "Vocabulary frequency threshold");
    cmd->add_option("--train-docs", train_doc_mode,
                    "Documents seen during training: none, oracle, retrieved")
        ->check(CLI::IsMember({"none", "oracle", "retrieved"}));
    cmd->add_option("--epoch-eval-beam", config.epoch_eval_beam,
                    "Beam width for per-epoch model selection");
    cmd->add_option("--nl-embeddings", config.nl_embeddings_path,
                    "Pretrained word2vec-style text embeddings for natural language tokens");
    hidden_opt = cmd->add_option("--hidden", config.model.encoder_hidden, "Encoder hidden size");
    dropout_opt = cmd->add_option("--dropout", config.model.dropout, "Dropout rate");
    cmd->add_option("--nl-embed-dim", config.model.nl_embed_dim, "NL embedding width");
    cmd->add_option("--code-embed-dim", config.model.code_embed_dim, "Code embedding width");
    cmd->add_option("--output-embed-dim", config.model.output_embed_dim,
                    "Output embedding width");
    cmd->add_option("--max-steps", config.model.max_decode_steps, "Max decoding steps");
    cmd->add_flag("--strict-selective-read", config.model.strict_selective_read,
                  "Raw-sum selective-read normalization instead of softmax");
    cmd->add_flag("--no-share-nl-encoder{false}", config.model.share_nl_encoder,
                  "Use a separate description encoder");
    cmd->add_flag("--timings", timings, "Include elapsed seconds in the epoch log");
  }
};

struct Inputs {
  std::vector<corpus::Example> dataset;
  corpus::SplitManifest manifest;
  std::optional<docstore::DocumentSet> docs;
  std::optional<docstore::TfIdfIndex> index;
};

Inputs load_inputs(const std::string& dataset_path, const std::string& manifest_path,
                   const std::string& docs_path, const std::string& index_path) {
  Inputs in;
  in.dataset = corpus::load_dataset_jsonl(dataset_path);
  in.manifest = corpus::load_manifest(manifest_path);
  if (!docs_path.empty()) {
    in.docs = docstore::DocumentSet::ingest(docstore::load_documents_jsonl(docs_path));
  }
  if (!index_path.empty()) in.index = docstore::TfIdfIndex::load(index_path);
  return in;
}

int cmd_synth(const corpus::SynthConfig& cfg, const std::string& out_dir) {
  corpus::SynthOutput synth = corpus::generate_synthetic_corpus(cfg);
  fs::create_directories(out_dir);
  corpus::save_dataset_jsonl(out_dir + "/dataset.jsonl", synth.dataset);
  docstore::save_documents_jsonl(out_dir + "/docs.jsonl", synth.documents);
  corpus::save_allowlist(out_dir + "/allowlist.txt", synth.allowlist);
  write_text(out_dir + "/expected.json", synth.expected.dump(2) + "\n");
  std::cout << "examples: " << synth.dataset.size() << "\n";
  std::cout << "documents: " << synth.documents.size() << "\n";
  std::cout << "out: " << out_dir << "\n";
  return 0;
}

int cmd_ingest_docs(const std::string& in_path, const std::string& out_path) {
  std::vector<docstore::ApiEntry> raw = docstore::load_documents_jsonl(in_path);
  docstore::IngestReport report;
  docstore::DocumentSet set = docstore::DocumentSet::ingest(raw, &report);
  docstore::save_documents_jsonl(out_path, set.entries());
  std::cout << "input: " << report.input << "\n";
  std::cout << "kept: " << report.kept << "\n";
  std::cout << "dropped: " << report.dropped_empty_description << "\n";
  std::cout << "deduped: " << report.deduped << "\n";
  if (report.input == 0) std::cerr << "warning: no input entries\n";
  return 0;
}

int cmd_split(const std::string& dataset_path, const std::string& kind, std::uint64_t seed,
              int dev_size, int test_size, const std::string& allowlist_path,
              const std::string& out_path) {
  std::vector<corpus::Example> dataset = corpus::load_dataset_jsonl(dataset_path);
  corpus::Allowlist allowlist;
  if (!allowlist_path.empty()) allowlist = corpus::load_allowlist(allowlist_path);
  corpus::SplitConfig cfg;
  cfg.kind = corpus::split_kind_from_string(kind);
  cfg.seed = seed;
  cfg.dev_size = dev_size;
  cfg.test_size = test_size;
  corpus::SplitManifest manifest = corpus::plan_split(dataset, cfg, allowlist, &std::cerr);
  corpus::save_manifest(out_path, manifest);
  std::cout << "train: " << manifest.train.size() << "\n";
  std::cout << "dev: " << manifest.dev.size() << "\n";
  std::cout << "test: " << manifest.test.size() << "\n";
  return 0;
}

int cmd_stats(const std::string& dataset_path, const std::string& manifest_path, int min_freq) {
  std::vector<corpus::Example> dataset = corpus::load_dataset_jsonl(dataset_path);
  corpus::SplitManifest manifest = corpus::load_manifest(manifest_path);
  corpus::Vocabulary vocab =
      corpus::build_vocabulary(select_split(dataset, manifest.train), min_freq);
  corpus::DatasetStats stats = corpus::compute_oov_stats(dataset, manifest, vocab);
  std::cout << corpus::format_stats_table(stats);
  return 0;
}

int cmd_fit_retriever(const std::string& dataset_path, const std::string& manifest_path,
                      const std::string& docs_path, const std::string& out_path) {
  Inputs in = load_inputs(dataset_path, manifest_path, docs_path, "");
  std::vector<std::string> intents;
  for (const corpus::Example& ex : select_split(in.dataset, in.manifest.train)) {
    intents.push_back(ex.intent);
  }
  docstore::TfIdfIndex index = docstore::TfIdfIndex::fit(intents, *in.docs);
  index.save(out_path);
  std::cout << "documents: " << index.n_docs() << "\n";
  std::cout << "features: " << index.n_features() << "\n";
  return 0;
}

int cmd_eval_retriever(const std::string& dataset_path, const std::string& manifest_path,
                       const std::string& docs_path, const std::string& index_path, int k,
                       const std::string& split_name) {
  Inputs in = load_inputs(dataset_path, manifest_path, docs_path, index_path);
  std::vector<docstore::RetrievalResult> results;
  std::vector<std::vector<std::string>> gold;
  for (const corpus::Example& ex : select_split(in.dataset, split_ids(in.manifest, split_name))) {
    results.push_back(docstore::retrieve_topk(ex.intent, *in.docs, *in.index, k, ex.id));
    std::vector<std::string> keys;
    for (const corpus::ApiAnnotation& a : ex.apis) {
      keys.push_back(docstore::make_entry_key(a.library, a.primitive));
    }
    gold.push_back(std::move(keys));
  }
  double recall = docstore::recall_at_k(results, gold);
  std::cout << "recall@" << k << ": " << std::fixed << std::setprecision(2) << 100.0 * recall
            << "\n";
  return 0;
}

evaltrain::TrainConfig finalize_train_config(TrainCli& cli, std::uint64_t seed, int k,
                                             evaltrain::Setting setting) {
  cli.apply_setting_defaults(setting);
  cli.config.seed = seed;
  cli.config.model.k = k;
  cli.config.train_doc_mode = evaltrain::doc_mode_from_string(cli.train_doc_mode);
  return cli.config;
}

int cmd_train(const std::string& dataset_path, const std::string& manifest_path,
              const std::string& docs_path, const std::string& index_path,
              const std::string& setting_name, TrainCli& cli, std::uint64_t seed, int k,
              const std::string& out_path, const std::string& log_path) {
  Inputs in = load_inputs(dataset_path, manifest_path, docs_path, index_path);
  evaltrain::Setting setting = evaltrain::setting_from_string(setting_name);
  evaltrain::TrainConfig config = finalize_train_config(cli, seed, k, setting);

  switch (setting) {
    case evaltrain::Setting::kBaseline:
      config.train_doc_mode = evaltrain::DocMode::kNone;
      config.eval_doc_mode = evaltrain::DocMode::kNone;
      break;
    case evaltrain::Setting::kOracle:
      config.train_doc_mode = evaltrain::DocMode::kOracle;
      config.eval_doc_mode = evaltrain::DocMode::kOracle;
      break;
    case evaltrain::Setting::kPartial:
      config.eval_doc_mode = evaltrain::DocMode::kRetrieved;
      break;
  }
  const docstore::DocumentSet* docs = in.docs ? &*in.docs : nullptr;
  const docstore::TfIdfIndex* index = in.index ? &*in.index : nullptr;
  evaltrain::DocProvider train_docs(config.train_doc_mode, docs, index, config.model.k);
  evaltrain::DocProvider eval_docs(config.eval_doc_mode, docs, index, config.model.k);

  std::ofstream log_stream;
  std::ostream* log = nullptr;
  if (!log_path.empty()) {
    log_stream.open(log_path);
    if (!log_stream) throw std::runtime_error("cannot open log for writing: " + log_path);
    log = &log_stream;
  }
  evaltrain::TrainResult result =
      evaltrain::train(in.dataset, in.manifest, train_docs, eval_docs, config, log, cli.timings,
                       setting == evaltrain::Setting::kBaseline ? nullptr : docs);
  nlohmann::json meta = result.checkpoint_meta;
  meta["setting"] = setting_name;
  model::save_model(out_path, *result.params, meta);
  std::cout << "best_epoch: " << result.best_epoch << "\n";
  std::cout << "best_dev_bleu: " << result.best_dev_bleu << "\n";
  std::cout << "checkpoint: " << out_path << "\n";
  return 0;
}

int cmd_generate(const std::string& dataset_path, const std::string& manifest_path,
                 const std::string& docs_path, const std::string& index_path,
                 const std::string& checkpoint_path, const std::string& split_name,
                 const std::string& doc_mode_name, int beam, int k,
                 const std::string& out_path) {
  Inputs in = load_inputs(dataset_path, manifest_path, docs_path, index_path);
  model::LoadedModel loaded = model::load_model(checkpoint_path);

  std::string mode_name = doc_mode_name;
  if (mode_name.empty()) mode_name = loaded.train_meta.value("eval_doc_mode", "oracle");
  evaltrain::DocMode mode = evaltrain::doc_mode_from_string(mode_name);
  const docstore::DocumentSet* docs = in.docs ? &*in.docs : nullptr;
  const docstore::TfIdfIndex* index = in.index ? &*in.index : nullptr;
  evaltrain::DocProvider provider(mode, docs, index, k);

  std::vector<corpus::Example> examples =
      select_split(in.dataset, split_ids(in.manifest, split_name));
  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("cannot open for writing: " + out_path);
  std::vector<std::vector<std::string>> hyps, refs;
  for (const corpus::Example& ex : examples) {
    model::DecodeResult out =
        model::decode(*loaded.params, corpus::tokenize_nl(ex.intent), provider.entries_for(ex),
                      beam, loaded.params->config().max_decode_steps);
    nlohmann::json line{{"id", ex.id},
                        {"hypothesis", evaltrain::join_tokens(out.tokens)},
                        {"tokens", out.tokens}};
    os << line.dump() << "\n";
    hyps.push_back(out.tokens);
    refs.push_back(ex.snippet_tokens);
  }
  if (!examples.empty()) {
    std::cout << "bleu: " << std::fixed << std::setprecision(4)
              << evaltrain::corpus_bleu(hyps, refs) << "\n";
  }
  std::cout << "hypotheses: " << out_path << "\n";
  return 0;
}

int cmd_experiment(const std::string& dataset_path, const std::string& manifest_path,
                   const std::string& docs_path, const std::string& index_path,
                   const std::string& setting_name, TrainCli& cli, std::uint64_t seed, int k,
                   int beam, const std::string& out_dir) {
  Inputs in = load_inputs(dataset_path, manifest_path, docs_path, index_path);
  evaltrain::Setting setting = evaltrain::setting_from_string(setting_name);
  evaltrain::TrainConfig config = finalize_train_config(cli, seed, k, setting);

  fs::create_directories(out_dir);
  std::ofstream log_stream(out_dir + "/train_log.jsonl");
  const docstore::DocumentSet* docs = in.docs ? &*in.docs : nullptr;
  const docstore::TfIdfIndex* index = in.index ? &*in.index : nullptr;

  evaltrain::ExperimentResult result = evaltrain::run_experiment(
      in.dataset, in.manifest, docs, index, setting, config, beam, &log_stream, cli.timings);

  nlohmann::json meta = result.train.checkpoint_meta;
  meta["setting"] = setting_name;
  model::save_model(out_dir + "/checkpoint.ckpt", *result.train.params, meta);
  write_text(out_dir + "/report_dev.json", result.dev.to_json().dump(2) + "\n");
  write_text(out_dir + "/report_test.json", result.test.to_json().dump(2) + "\n");
  write_text(out_dir + "/examples_dev.txt", result.dev.side_by_side(in.dataset));
  write_text(out_dir + "/examples_test.txt", result.test.side_by_side(in.dataset));

  std::cout << std::fixed << std::setprecision(4);
  std::cout << "setting: " << setting_name << "\n";
  std::cout << "best_epoch: " << result.train.best_epoch << "\n";
  std::cout << "dev_bleu: " << result.dev.bleu << "\n";
  std::cout << "dev_oov_recall: " << result.dev.oov_recall_pct << "\n";
  std::cout << "test_bleu: " << result.test.bleu << "\n";
  std::cout << "test_oov_recall: " << result.test.oov_recall_pct << "\n";
  std::cout << "out: " << out_dir << "\n";
  return 0;
}

// Grid search over encoder width, dropout, and (for the partial setting) the
// training document source; selection by dev BLEU.
int cmd_sweep(const std::string& dataset_path, const std::string& manifest_path,
              const std::string& docs_path, const std::string& index_path,
              const std::string& setting_name, TrainCli& cli, std::uint64_t seed, int k,
              int beam, std::vector<int> hiddens, std::vector<double> dropouts,
              const std::string& out_dir) {
  Inputs in = load_inputs(dataset_path, manifest_path, docs_path, index_path);
  evaltrain::Setting setting = evaltrain::setting_from_string(setting_name);
  const docstore::DocumentSet* docs = in.docs ? &*in.docs : nullptr;
  const docstore::TfIdfIndex* index = in.index ? &*in.index : nullptr;

  std::vector<evaltrain::DocMode> train_doc_grid = {evaltrain::DocMode::kOracle};
  if (setting == evaltrain::Setting::kPartial) {
    train_doc_grid.push_back(evaltrain::DocMode::kRetrieved);
  }

  fs::create_directories(out_dir);
  nlohmann::json summary = nlohmann::json::array();
  double best_bleu = -1.0;
  nlohmann::json best;
  for (int hidden : hiddens) {
    for (double dropout : dropouts) {
      for (evaltrain::DocMode train_mode : train_doc_grid) {
        evaltrain::TrainConfig config = finalize_train_config(cli, seed, k, setting);
        config.model.encoder_hidden = hidden;
        config.model.dropout = dropout;
        config.train_doc_mode = train_mode;
        evaltrain::ExperimentResult result = evaltrain::run_experiment(
            in.dataset, in.manifest, docs, index, setting, config, beam);
        nlohmann::json row{{"hidden", hidden},
                           {"dropout", dropout},
                           {"train_docs", evaltrain::to_string(train_mode)},
                           {"best_epoch", result.train.best_epoch},
                           {"dev_bleu", result.dev.bleu},
                           {"dev_oov_recall", result.dev.oov_recall_pct},
                           {"test_bleu", result.test.bleu},
                           {"test_oov_recall", result.test.oov_recall_pct}};
        std::cout << "hidden " << hidden << "  dropout " << dropout << "  train_docs "
                  << evaltrain::to_string(train_mode) << "  dev_bleu " << std::fixed
                  << std::setprecision(4) << result.dev.bleu << "\n";
        if (result.dev.bleu > best_bleu) {
          best_bleu = result.dev.bleu;
          best = row;
        }
        summary.push_back(std::move(row));
      }
    }
  }
  nlohmann::json report{{"setting", setting_name}, {"runs", summary}, {"best", best}};
  write_text(out_dir + "/sweep.json", report.dump(2) + "\n");
  std::cout << "best: hidden " << best.at("hidden") << ", dropout " << best.at("dropout")
            << ", train_docs " << best.at("train_docs").get<std::string>() << ", dev_bleu "
            << best.at("dev_bleu") << "\n";
  std::cout << "out: " << out_dir << "/sweep.json\n";
  return 0;
}

int cmd_query(const std::string& docs_path, const std::string& index_path,
              const std::string& checkpoint_path, int k, int beam) {
  docstore::DocumentSet docs =
      docstore::DocumentSet::ingest(docstore::load_documents_jsonl(docs_path));
  docstore::TfIdfIndex index = docstore::TfIdfIndex::load(index_path);
  model::LoadedModel loaded = model::load_model(checkpoint_path);

  std::cout << "docgen query: one intent per line (ctrl-d to exit)\n";
  std::string line;
  while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    docstore::RetrievalResult top = docstore::retrieve_topk(line, docs, index, k);
    std::vector<docstore::ApiEntry> entries;
    for (std::size_t i = 0; i < top.ranked.size(); ++i) {
      const docstore::ApiEntry* e = docs.find(top.ranked[i].first);
      if (!e) continue;
      entries.push_back(*e);
      std::cout << "  " << (i + 1) << ": " << e->signature << "\n";
      std::cout << "     " << e->description << "\n";
    }
    model::DecodeResult out =
        model::decode(*loaded.params, corpus::tokenize_nl(line), entries, beam,
                      loaded.params->config().max_decode_steps);
    std::cout << "  => " << evaltrain::join_tokens(out.tokens) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"docgen: code generation grounded in API documentation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Configuration file (key = value lines; flags win)");

  std::string dataset_path, manifest_path, docs_path, index_path, checkpoint_path;
  std::string out_path, out_dir, in_path, log_path;
  std::string split_kind = "library", split_name = "dev", setting = "oracle", doc_mode;
  std::uint64_t seed = 1;
  int k = 5, beam = 15, dev_size = 200, test_size = 500, min_freq = 1;

  corpus::SynthConfig synth_cfg;
  TrainCli train_cli;

  auto* synth = app.add_subcommand("synth", "Generate the synthetic corpus and document set");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--train", synth_cfg.n_train, "Train examples");
  synth->add_option("--dev", synth_cfg.n_dev, "Dev examples");
  synth->add_option("--test", synth_cfg.n_test, "Test examples");
  synth->add_option("--libs", synth_cfg.stdlib_libs, "Stdlib-class libraries");
  synth->add_option("--tp-libs", synth_cfg.thirdparty_libs, "Third-party libraries");
  synth->add_option("--prims-per-lib", synth_cfg.primitives_per_lib, "Primitives per library");
  synth->add_option("--rare-fraction", synth_cfg.rare_train_fraction,
                    "Fraction of train examples with one-off primitives");
  synth->add_option("--distractors", synth_cfg.distractor_entries, "Unused document entries");
  synth->add_option("--seed", synth_cfg.seed, "Generator seed");
  synth->add_flag("--echo", synth_cfg.echo_descriptions,
                  "Descriptions repeat the intent text verbatim");

  auto* ingest = app.add_subcommand("ingest-docs", "Deduplicate a raw document-set file");
  ingest->add_option("--in", in_path, "Raw JSONL document entries")->required();
  ingest->add_option("--out", out_path, "Deduplicated output file")->required();

  auto* split = app.add_subcommand("split", "Plan a dataset split");
  split->add_option("--dataset", dataset_path)->required();
  split->add_option("--split", split_kind, "random or library")
      ->check(CLI::IsMember({"random", "library"}));
  split->add_option("--seed", seed);
  split->add_option("--dev-size", dev_size);
  split->add_option("--test-size", test_size, "Random split only");
  split->add_option("--allowlist", in_path, "Stdlib module allowlist file");
  split->add_option("--out", out_path, "Manifest output")->required();

  auto* stats = app.add_subcommand("stats", "Report split sizes and OOV statistics");
  stats->add_option("--dataset", dataset_path)->required();
  stats->add_option("--manifest", manifest_path)->required();
  stats->add_option("--min-freq", min_freq, "Vocabulary frequency threshold");

  auto* fit = app.add_subcommand("fit-retriever", "Fit the tf-idf index");
  fit->add_option("--dataset", dataset_path)->required();
  fit->add_option("--manifest", manifest_path)->required();
  fit->add_option("--docs", docs_path)->required();
  fit->add_option("--out", out_path, "Index output file")->required();

  auto* evalr = app.add_subcommand("eval-retriever", "Recall@k of the fitted retriever");
  evalr->add_option("--dataset", dataset_path)->required();
  evalr->add_option("--manifest", manifest_path)->required();
  evalr->add_option("--docs", docs_path)->required();
  evalr->add_option("--index", index_path)->required();
  evalr->add_option("--k", k);
  evalr->add_option("--split-name", split_name, "train, dev, or test");

  auto* train = app.add_subcommand("train", "Train a model and save its checkpoint");
  train->add_option("--dataset", dataset_path)->required();
  train->add_option("--manifest", manifest_path)->required();
  train->add_option("--docs", docs_path);
  train->add_option("--index", index_path);
  train->add_option("--setting", setting, "baseline, oracle, or partial")
      ->check(CLI::IsMember({"baseline", "oracle", "partial"}));
  train->add_option("--seed", seed);
  train->add_option("--k", k, "Signature-description pairs per example");
  train->add_option("--out", out_path, "Checkpoint output")->required();
  train->add_option("--log", log_path, "Epoch log (JSON lines)");
  train_cli.attach(train);

  auto* gen = app.add_subcommand("generate", "Decode a split with a trained checkpoint");
  gen->add_option("--dataset", dataset_path)->required();
  gen->add_option("--manifest", manifest_path)->required();
  gen->add_option("--docs", docs_path);
  gen->add_option("--index", index_path);
  gen->add_option("--checkpoint", checkpoint_path)->required();
  gen->add_option("--split-name", split_name, "train, dev, or test");
  gen->add_option("--doc-mode", doc_mode, "none, oracle, or retrieved");
  gen->add_option("--beam", beam);
  gen->add_option("--k", k);
  gen->add_option("--out", out_path, "Hypotheses output (JSON lines)")->required();

  auto* exp = app.add_subcommand("experiment", "Train and evaluate one setting end to end");
  exp->add_option("--dataset", dataset_path)->required();
  exp->add_option("--manifest", manifest_path)->required();
  exp->add_option("--docs", docs_path);
  exp->add_option("--index", index_path);
  exp->add_option("--setting", setting, "baseline, oracle, or partial")
      ->check(CLI::IsMember({"baseline", "oracle", "partial"}));
  exp->add_option("--seed", seed);
  exp->add_option("--k", k);
  exp->add_option("--beam", beam, "Final evaluation beam width");
  exp->add_option("--out", out_dir, "Output directory")->required();
  train_cli.attach(exp);

  std::vector<int> sweep_hidden = {128, 256, 384};
  std::vector<double> sweep_dropout = {0.3, 0.5};
  auto* sweep = app.add_subcommand("sweep", "Grid search over hidden size and dropout");
  sweep->add_option("--dataset", dataset_path)->required();
  sweep->add_option("--manifest", manifest_path)->required();
  sweep->add_option("--docs", docs_path);
  sweep->add_option("--index", index_path);
  sweep->add_option("--setting", setting, "baseline, oracle, or partial")
      ->check(CLI::IsMember({"baseline", "oracle", "partial"}));
  sweep->add_option("--seed", seed);
  sweep->add_option("--k", k);
  sweep->add_option("--beam", beam);
  sweep->add_option("--grid-hidden", sweep_hidden, "Hidden sizes to try");
  sweep->add_option("--grid-dropout", sweep_dropout, "Dropout rates to try");
  sweep->add_option("--out", out_dir, "Output directory")->required();
  train_cli.attach(sweep);

  auto* query = app.add_subcommand("query", "Interactive retrieve-and-generate loop");
  query->add_option("--docs", docs_path)->required();
  query->add_option("--index", index_path)->required();
  query->add_option("--checkpoint", checkpoint_path)->required();
  query->add_option("--k", k);
  query->add_option("--beam", beam);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(synth_cfg, out_dir);
    if (ingest->parsed()) return cmd_ingest_docs(in_path, out_path);
    if (split->parsed()) {
      return cmd_split(dataset_path, split_kind, seed, dev_size, test_size, in_path, out_path);
    }
    if (stats->parsed()) return cmd_stats(dataset_path, manifest_path, min_freq);
    if (fit->parsed()) return cmd_fit_retriever(dataset_path, manifest_path, docs_path, out_path);
    if (evalr->parsed()) {
      return cmd_eval_retriever(dataset_path, manifest_path, docs_path, index_path, k, split_name);
    }
    if (train->parsed()) {
      return cmd_train(dataset_path, manifest_path, docs_path, index_path, setting, train_cli,
                       seed, k, out_path, log_path);
    }
    if (gen->parsed()) {
      return cmd_generate(dataset_path, manifest_path, docs_path, index_path, checkpoint_path,
                          split_name, doc_mode, beam, k, out_path);
    }
    if (exp->parsed()) {
      return cmd_experiment(dataset_path, manifest_path, docs_path, index_path, setting,
                            train_cli, seed, k, beam, out_dir);
    }
    if (sweep->parsed()) {
      return cmd_sweep(dataset_path, manifest_path, docs_path, index_path, setting, train_cli,
                       seed, k, beam, sweep_hidden, sweep_dropout, out_dir);
    }
    if (query->parsed()) return cmd_query(docs_path, index_path, checkpoint_path, k, beam);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
