#include "docgen/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "docgen/nn/optim.hpp"
#include "docgen/nn/serialize.hpp"

namespace docgen::evaltrain {

std::string to_string(DocMode mode) {
  switch (mode) {
    case DocMode::kNone: return "none";
    case DocMode::kOracle: return "oracle";
    case DocMode::kRetrieved: return "retrieved";
  }
  return "none";
}

DocMode doc_mode_from_string(const std::string& s) {
  if (s == "none") return DocMode::kNone;
  if (s == "oracle") return DocMode::kOracle;
  if (s == "retrieved") return DocMode::kRetrieved;
  throw std::invalid_argument("unknown document mode: " + s);
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (patience < 1 || patience > epochs) {
    throw std::invalid_argument("train config: patience must be in [1, epochs]");
  }
  if (vocab_min_freq < 1) throw std::invalid_argument("train config: vocab_min_freq must be >= 1");
  if (epoch_eval_beam < 1) throw std::invalid_argument("train config: epoch_eval_beam must be >= 1");
  model.validate();
}

DocProvider::DocProvider(DocMode mode, const docstore::DocumentSet* docs,
                         const docstore::TfIdfIndex* index, int k)
    : mode_(mode), docs_(docs), index_(index), k_(k) {
  if (mode_ == DocMode::kRetrieved && (!docs_ || !index_)) {
    throw std::invalid_argument("retrieved document mode needs a document set and a fitted index");
  }
}

std::vector<docstore::ApiEntry> DocProvider::entries_for(const corpus::Example& example) const {
  std::vector<docstore::ApiEntry> entries;
  switch (mode_) {
    case DocMode::kNone:
      break;
    case DocMode::kOracle:
      for (const corpus::ApiAnnotation& a : example.apis) {
        if (entries.size() >= static_cast<std::size_t>(k_)) break;
        docstore::ApiEntry e;
        e.key = docstore::make_entry_key(a.library, a.primitive);
        e.signature = a.signature;
        e.description = a.description;
        e.library = a.library;
        entries.push_back(std::move(e));
      }
      break;
    case DocMode::kRetrieved: {
      docstore::RetrievalResult result =
          docstore::retrieve_topk(example.intent, *docs_, *index_, k_, example.id);
      for (const auto& [key, score] : result.ranked) {
        const docstore::ApiEntry* e = docs_->find(key);
        if (e) entries.push_back(*e);
      }
      break;
    }
  }
  return entries;
}

std::vector<std::string> DocProvider::keys_for(const corpus::Example& example) const {
  std::vector<std::string> keys;
  for (const docstore::ApiEntry& e : entries_for(example)) keys.push_back(e.key);
  return keys;
}

bool EarlyStopper::update(int epoch, double score) {
  if (best_epoch_ == 0 || score > best_score_) {
    best_score_ = score;
    best_epoch_ = epoch;
    since_best_ = 0;
    return false;
  }
  ++since_best_;
  return since_best_ >= patience_;
}

namespace {

std::vector<const corpus::Example*> select_examples(
    const std::vector<corpus::Example>& dataset, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const corpus::Example*> by_id;
  for (const corpus::Example& ex : dataset) by_id[ex.id] = &ex;
  std::vector<const corpus::Example*> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw std::runtime_error("manifest id not in dataset: " + id);
    out.push_back(it->second);
  }
  return out;
}

std::vector<nn::Tensor> snapshot(const nn::ParameterStore& store) {
  std::vector<nn::Tensor> values;
  for (const nn::Parameter* p : store.all()) values.push_back(p->value);
  return values;
}

void restore(nn::ParameterStore& store, const std::vector<nn::Tensor>& values) {
  std::vector<nn::Parameter*> params = store.all();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

double dev_bleu_for(model::ModelParams& params,
                    const std::vector<const corpus::Example*>& dev_examples,
                    const DocProvider& eval_docs, int beam) {
  if (dev_examples.empty()) return 0.0;
  std::vector<std::vector<std::string>> hyps, refs;
  hyps.reserve(dev_examples.size());
  refs.reserve(dev_examples.size());
  for (const corpus::Example* ex : dev_examples) {
    model::DecodeResult out =
        model::decode(params, corpus::tokenize_nl(ex->intent), eval_docs.entries_for(*ex), beam,
                      params.config().max_decode_steps);
    hyps.push_back(std::move(out.tokens));
    refs.push_back(ex->snippet_tokens);
  }
  return corpus_bleu(hyps, refs);
}

}  // namespace

TrainResult train(const std::vector<corpus::Example>& dataset,
                  const corpus::SplitManifest& manifest, const DocProvider& train_docs,
                  const DocProvider& eval_docs, const TrainConfig& config,
                  std::ostream* epoch_stream, bool log_timings,
                  const docstore::DocumentSet* doc_set) {
  config.validate();
  std::vector<const corpus::Example*> train_examples = select_examples(dataset, manifest.train);
  std::vector<const corpus::Example*> dev_examples = select_examples(dataset, manifest.dev);
  if (train_examples.empty()) throw std::invalid_argument("train: empty training split");

  std::vector<corpus::Example> train_values;
  train_values.reserve(train_examples.size());
  for (const corpus::Example* ex : train_examples) train_values.push_back(*ex);
  corpus::Vocabulary vocab = corpus::build_vocabulary(train_values, config.vocab_min_freq);

  std::vector<std::string> nl_texts;
  for (const corpus::Example* ex : train_examples) nl_texts.push_back(ex->intent);
  if (doc_set) {
    for (const docstore::ApiEntry& e : doc_set->entries()) nl_texts.push_back(e.description);
  } else {
    std::unordered_set<std::string> seen_desc;
    for (const corpus::Example* ex : train_examples) {
      for (const docstore::ApiEntry& e : train_docs.entries_for(*ex)) {
        if (seen_desc.insert(e.description).second) nl_texts.push_back(e.description);
      }
    }
  }
  model::NlVocab nl_vocab = model::NlVocab::build(nl_texts);

  nn::Rng root(config.seed);
  nn::Rng init_rng = root.fork(0xD0C11);

  std::unordered_map<std::string, std::vector<double>> pretrained;
  const std::unordered_map<std::string, std::vector<double>>* pretrained_ptr = nullptr;
  if (!config.nl_embeddings_path.empty()) {
    pretrained = nn::load_word2vec_text(config.nl_embeddings_path,
                                        static_cast<std::size_t>(config.model.nl_embed_dim));
    pretrained_ptr = &pretrained;
  }

  auto params = std::make_unique<model::ModelParams>(config.model, vocab, nl_vocab, init_rng,
                                                     pretrained_ptr);

  nn::AdamConfig adam_config;
  adam_config.lr = config.lr;
  adam_config.weight_decay = config.weight_decay;
  adam_config.decoupled_decay = config.decoupled_weight_decay;
  std::vector<nn::Parameter*> all_params = params->store().all();
  nn::Adam adam(adam_config, all_params);

  EarlyStopper stopper(config.patience);
  TrainResult result;
  std::vector<nn::Tensor> best_values = snapshot(params->store());

  std::vector<std::size_t> order(train_examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    auto epoch_start = std::chrono::steady_clock::now();
    nn::Rng shuffle_rng = root.fork(0x5E00 + static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batch_id = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_id) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      params->store().zero_grads();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const corpus::Example& ex = *train_examples[order[i]];
        nn::Rng dropout_rng =
            root.fork((static_cast<std::uint64_t>(epoch) << 32) ^ order[i] ^ 0xD80);
        model::LossOptions options;
        options.training = true;
        options.dropout_rng = &dropout_rng;
        options.backprop = true;
        options.grad_scale = 1.0 / static_cast<double>(end - start);
        double loss;
        try {
          loss = model::example_loss(*params, ex, train_docs.entries_for(ex), options);
        } catch (const std::runtime_error& e) {
          throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_id) + " (example " + ex.id +
                                   "): " + e.what());
        }
        if (!std::isfinite(loss)) {
          throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_id) + " (example " + ex.id +
                                   "): loss is not finite");
        }
        batch_loss += loss;
      }
      adam.step();
      loss_sum += batch_loss;
    }

    double train_loss = loss_sum / static_cast<double>(train_examples.size());
    double dev_bleu = dev_bleu_for(*params, dev_examples, eval_docs, config.epoch_eval_beam);
    bool stop = stopper.update(epoch, dev_bleu);
    if (stopper.improved()) best_values = snapshot(params->store());

    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    result.log.push_back(EpochLog{epoch, train_loss, dev_bleu, elapsed});
    if (epoch_stream) {
      nlohmann::json line{{"epoch", epoch}, {"train_loss", train_loss}, {"dev_bleu", dev_bleu}};
      if (log_timings) line["elapsed_s"] = elapsed;
      *epoch_stream << line.dump() << "\n";
    }
    if (stop) break;
  }

  restore(params->store(), best_values);
  result.best_epoch = stopper.best_epoch();
  result.best_dev_bleu = stopper.best_score();
  result.checkpoint_meta = nlohmann::json{
      {"epoch", result.best_epoch},
      {"dev_bleu", result.best_dev_bleu},
      {"config_hash", nn::fnv1a(config.model.to_json().dump().data(),
                                config.model.to_json().dump().size())},
      {"rng", {{"algorithm", nn::Rng::algorithm()}, {"seed", config.seed}}},
      {"train_doc_mode", to_string(config.train_doc_mode)},
      {"eval_doc_mode", to_string(config.eval_doc_mode)},
      {"vocab_min_freq", config.vocab_min_freq}};
  result.params = std::move(params);
  return result;
}

std::string to_string(Setting setting) {
  switch (setting) {
    case Setting::kBaseline: return "baseline";
    case Setting::kOracle: return "oracle";
    case Setting::kPartial: return "partial";
  }
  return "baseline";
}

Setting setting_from_string(const std::string& s) {
  if (s == "baseline") return Setting::kBaseline;
  if (s == "oracle") return Setting::kOracle;
  if (s == "partial") return Setting::kPartial;
  throw std::invalid_argument("unknown experiment setting: " + s);
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["split"] = split_name;
  j["setting"] = setting;
  j["bleu"] = bleu;
  j["oov_recall"] = oov_recall_pct;
  j["oov_found"] = oov_found;
  j["oov_total"] = oov_total;
  j["examples"] = nlohmann::json::array();
  for (const PerExampleRecord& r : records) {
    j["examples"].push_back({{"id", r.id},
                             {"hypothesis", r.hypothesis},
                             {"reference", r.reference},
                             {"retrieved", r.retrieved_keys},
                             {"copied_oov", r.copied_oov}});
  }
  return j;
}

std::string EvalReport::side_by_side(const std::vector<corpus::Example>& dataset) const {
  std::unordered_map<std::string, const corpus::Example*> by_id;
  for (const corpus::Example& ex : dataset) by_id[ex.id] = &ex;
  std::ostringstream os;
  os << "setting: " << setting << "  split: " << split_name << "\n";
  os << "bleu: " << bleu << "  oov_recall: " << oov_recall_pct << "\n";
  for (const PerExampleRecord& r : records) {
    os << std::string(72, '-') << "\n";
    auto it = by_id.find(r.id);
    os << "intent : " << (it != by_id.end() ? it->second->intent : r.id) << "\n";
    os << "gold   : " << r.reference << "\n";
    os << "output : " << r.hypothesis << "\n";
    if (!r.copied_oov.empty()) os << "oov hit: " << join_tokens(r.copied_oov) << "\n";
    for (std::size_t i = 0; i < r.retrieved_keys.size(); ++i) {
      os << "  " << (i + 1) << ": " << r.retrieved_keys[i] << "\n";
    }
  }
  return os.str();
}

EvalReport evaluate_split(model::ModelParams& params, const std::vector<corpus::Example>& dataset,
                          const std::vector<std::string>& split_ids, const std::string& split_name,
                          const DocProvider& docs, int beam_size, const std::string& setting_name) {
  std::vector<const corpus::Example*> examples = select_examples(dataset, split_ids);
  EvalReport report;
  report.split_name = split_name;
  report.setting = setting_name;

  std::vector<std::vector<std::string>> hyps, refs;
  hyps.reserve(examples.size());
  refs.reserve(examples.size());
  for (const corpus::Example* ex : examples) {
    std::vector<docstore::ApiEntry> entries = docs.entries_for(*ex);
    model::DecodeResult out = model::decode(params, corpus::tokenize_nl(ex->intent), entries,
                                            beam_size, params.config().max_decode_steps);

    PerExampleRecord record;
    record.id = ex->id;
    record.hyp_tokens = out.tokens;
    record.ref_tokens = ex->snippet_tokens;
    record.hypothesis = join_tokens(out.tokens);
    record.reference = join_tokens(ex->snippet_tokens);
    for (const docstore::ApiEntry& e : entries) record.retrieved_keys.push_back(e.key);

    std::unordered_set<std::string> hyp_set(out.tokens.begin(), out.tokens.end());
    for (const std::string& tok : oov_tokens(*ex, params.vocab())) {
      if (hyp_set.count(tok)) record.copied_oov.push_back(tok);
    }

    hyps.push_back(std::move(out.tokens));
    refs.push_back(ex->snippet_tokens);
    report.records.push_back(std::move(record));
  }

  if (!examples.empty()) {
    report.bleu = corpus_bleu(hyps, refs);
    std::vector<const corpus::Example*> ptrs(examples.begin(), examples.end());
    OovRecall recall = oov_recall(hyps, ptrs, params.vocab());
    report.oov_recall_pct = recall.percent();
    report.oov_found = recall.found;
    report.oov_total = recall.total;
  }
  return report;
}

ExperimentResult run_experiment(const std::vector<corpus::Example>& dataset,
                                const corpus::SplitManifest& manifest,
                                const docstore::DocumentSet* docs,
                                const docstore::TfIdfIndex* index, Setting setting,
                                TrainConfig config, int eval_beam, std::ostream* epoch_stream,
                                bool log_timings) {
  switch (setting) {
    case Setting::kBaseline:
      config.train_doc_mode = DocMode::kNone;
      config.eval_doc_mode = DocMode::kNone;
      break;
    case Setting::kOracle:
      config.train_doc_mode = DocMode::kOracle;
      config.eval_doc_mode = DocMode::kOracle;
      break;
    case Setting::kPartial:
      // Training documents stay configurable (oracle by default); evaluation
      // sees what the retriever extracts.
      if (config.train_doc_mode == DocMode::kNone) config.train_doc_mode = DocMode::kOracle;
      config.eval_doc_mode = DocMode::kRetrieved;
      if (!index || !docs) {
        throw std::invalid_argument("partial setting needs a document set and a fitted index");
      }
      break;
  }

  DocProvider train_docs(config.train_doc_mode, docs, index, config.model.k);
  DocProvider eval_docs(config.eval_doc_mode, docs, index, config.model.k);

  ExperimentResult result;
  result.train = train(dataset, manifest, train_docs, eval_docs, config, epoch_stream,
                       log_timings, setting == Setting::kBaseline ? nullptr : docs);

  int beam = eval_beam > 0 ? eval_beam : config.model.beam_size;
  result.dev = evaluate_split(*result.train.params, dataset, manifest.dev, "dev", eval_docs, beam,
                              to_string(setting));
  result.test = evaluate_split(*result.train.params, dataset, manifest.test, "test", eval_docs,
                               beam, to_string(setting));
  return result;
}

}  // namespace docgen::evaltrain
