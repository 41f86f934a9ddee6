#include <doctest.h>

#include <sstream>

#include "docgen/synthetic.hpp"
#include "docgen/train.hpp"

using namespace docgen;
using evaltrain::DocMode;
using evaltrain::TrainConfig;

namespace {

struct Setup {
  corpus::SynthOutput synth;
  corpus::SplitManifest manifest;
  docstore::DocumentSet docs;
  docstore::TfIdfIndex index;
};

Setup make_setup(int n_train, int n_dev, int n_test, std::uint64_t seed) {
  Setup s;
  corpus::SynthConfig cfg;
  cfg.n_train = n_train;
  cfg.n_dev = n_dev;
  cfg.n_test = n_test;
  cfg.stdlib_libs = 3;
  cfg.thirdparty_libs = 2;
  cfg.primitives_per_lib = 3;
  cfg.distractor_entries = 5;
  cfg.seed = seed;
  s.synth = corpus::generate_synthetic_corpus(cfg);
  corpus::SplitConfig scfg{corpus::SplitKind::kLibrary, seed, n_dev, 0};
  s.manifest = corpus::plan_split(s.synth.dataset, scfg, s.synth.allowlist);
  s.docs = docstore::DocumentSet::ingest(s.synth.documents);
  std::vector<std::string> intents;
  for (const std::string& id : s.manifest.train) {
    for (const corpus::Example& ex : s.synth.dataset) {
      if (ex.id == id) intents.push_back(ex.intent);
    }
  }
  s.index = docstore::TfIdfIndex::fit(intents, s.docs);
  return s;
}

TrainConfig tiny_train_config(std::uint64_t seed, int epochs) {
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.epochs = epochs;
  cfg.patience = epochs;
  cfg.seed = seed;
  cfg.vocab_min_freq = 2;
  cfg.model.nl_embed_dim = 8;
  cfg.model.code_embed_dim = 8;
  cfg.model.output_embed_dim = 8;
  cfg.model.encoder_hidden = 6;
  cfg.model.dropout = 0.3;
  cfg.model.beam_size = 3;
  cfg.model.max_decode_steps = 12;
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("train");

TEST_CASE("early stopping: patience one with decreasing scores stops at epoch two") {
  evaltrain::EarlyStopper stopper(1);
  CHECK_FALSE(stopper.update(1, 10.0));
  CHECK(stopper.update(2, 9.0));  // stop after epoch 2
  CHECK(stopper.best_epoch() == 1);
  CHECK(stopper.best_score() == 10.0);

  evaltrain::EarlyStopper patient(2);
  CHECK_FALSE(patient.update(1, 5.0));
  CHECK_FALSE(patient.update(2, 4.0));
  CHECK_FALSE(patient.update(3, 6.0));  // recovered
  CHECK(patient.improved());
  CHECK_FALSE(patient.update(4, 1.0));
  CHECK(patient.update(5, 1.0));
  CHECK(patient.best_epoch() == 3);
}

TEST_CASE("document providers resolve entries per mode") {
  Setup s = make_setup(24, 4, 2, 5);
  const corpus::Example& ex = s.synth.dataset[0];

  evaltrain::DocProvider none(DocMode::kNone, nullptr, nullptr, 5);
  CHECK(none.entries_for(ex).empty());

  evaltrain::DocProvider oracle(DocMode::kOracle, nullptr, nullptr, 5);
  std::vector<docstore::ApiEntry> entries = oracle.entries_for(ex);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].signature == ex.apis[0].signature);
  CHECK(entries[0].key == docstore::make_entry_key(ex.apis[0].library, ex.apis[0].primitive));

  evaltrain::DocProvider retrieved(DocMode::kRetrieved, &s.docs, &s.index, 5);
  std::vector<docstore::ApiEntry> top = retrieved.entries_for(ex);
  CHECK(top.size() == 5);

  CHECK_THROWS_AS(evaltrain::DocProvider(DocMode::kRetrieved, nullptr, nullptr, 5),
                  std::invalid_argument);
}

TEST_CASE("training is deterministic and returns the best-dev checkpoint") {
  Setup s = make_setup(24, 4, 2, 6);
  TrainConfig cfg = tiny_train_config(77, 3);
  evaltrain::DocProvider docs(DocMode::kOracle, nullptr, nullptr, cfg.model.k);

  std::ostringstream log1, log2;
  evaltrain::TrainResult r1 = evaltrain::train(s.synth.dataset, s.manifest, docs, docs, cfg, &log1);
  evaltrain::TrainResult r2 = evaltrain::train(s.synth.dataset, s.manifest, docs, docs, cfg, &log2);

  CHECK(log1.str() == log2.str());
  CHECK(r1.best_epoch == r2.best_epoch);
  CHECK(r1.best_dev_bleu == r2.best_dev_bleu);
  std::vector<nn::Parameter*> p1 = r1.params->store().all();
  std::vector<nn::Parameter*> p2 = r2.params->store().all();
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    REQUIRE(p1[i]->name == p2[i]->name);
    for (std::size_t j = 0; j < p1[i]->value.size(); ++j) {
      CHECK(p1[i]->value[j] == p2[i]->value[j]);
    }
  }

  CHECK(r1.log.size() == 3);
  double best = -1.0;
  for (const evaltrain::EpochLog& e : r1.log) best = std::max(best, e.dev_bleu);
  CHECK(r1.best_dev_bleu == best);
  CHECK(r1.checkpoint_meta.at("epoch") == r1.best_epoch);
  CHECK(r1.checkpoint_meta.contains("config_hash"));
  CHECK(r1.checkpoint_meta.at("rng").at("seed") == 77);

  // Epoch lines carry no timing by default, so logs are reproducible.
  CHECK(log1.str().find("elapsed") == std::string::npos);
}

TEST_CASE("divergent training aborts naming the batch") {
  Setup s = make_setup(16, 4, 2, 7);
  TrainConfig cfg = tiny_train_config(3, 2);
  cfg.lr = 1e160;  // guarantees overflow after the first update
  evaltrain::DocProvider docs(DocMode::kOracle, nullptr, nullptr, cfg.model.k);
  CHECK_THROWS_WITH_AS(evaltrain::train(s.synth.dataset, s.manifest, docs, docs, cfg),
                       doctest::Contains("batch"), std::runtime_error);
}

TEST_CASE("patience cuts training short once dev stops improving") {
  Setup s = make_setup(16, 4, 2, 8);
  TrainConfig cfg = tiny_train_config(11, 6);
  cfg.patience = 1;
  // An empty dev split scores 0 every epoch, so epoch 2 can never improve.
  corpus::SplitManifest stalled = s.manifest;
  stalled.test.insert(stalled.test.end(), stalled.dev.begin(), stalled.dev.end());
  stalled.dev.clear();
  evaltrain::DocProvider docs(DocMode::kOracle, nullptr, nullptr, cfg.model.k);
  evaltrain::TrainResult r = evaltrain::train(s.synth.dataset, stalled, docs, docs, cfg);
  CHECK(r.log.size() == 2);
  CHECK(r.best_epoch == 1);
}

TEST_CASE("baseline experiment reports structural zero oov recall") {
  Setup s = make_setup(24, 6, 2, 9);
  TrainConfig cfg = tiny_train_config(13, 2);
  evaltrain::ExperimentResult result =
      evaltrain::run_experiment(s.synth.dataset, s.manifest, &s.docs, &s.index,
                                evaltrain::Setting::kBaseline, cfg, /*eval_beam=*/2);
  CHECK(result.dev.records.size() == s.manifest.dev.size());
  CHECK(result.test.records.size() == s.manifest.test.size());
  CHECK(result.dev.oov_total == 6);  // one per third-party dev example
  CHECK(result.dev.oov_found == 0);
  CHECK(result.dev.oov_recall_pct == 0.0);
  CHECK(result.dev.bleu >= 0.0);
  CHECK(result.dev.bleu <= 100.0);
  for (const evaltrain::PerExampleRecord& r : result.dev.records) {
    CHECK(r.retrieved_keys.empty());  // baseline sees no documents
    CHECK(r.copied_oov.empty());
  }

  nlohmann::json j = result.dev.to_json();
  CHECK(j.at("split") == "dev");
  CHECK(j.at("setting") == "baseline");
  CHECK(j.at("examples").size() == s.manifest.dev.size());
  std::string dump = result.dev.side_by_side(s.synth.dataset);
  CHECK(dump.find("intent :") != std::string::npos);
  CHECK(dump.find("gold   :") != std::string::npos);
}

TEST_CASE("partial experiments require a fitted index") {
  Setup s = make_setup(16, 4, 2, 10);
  TrainConfig cfg = tiny_train_config(1, 2);
  CHECK_THROWS_AS(evaltrain::run_experiment(s.synth.dataset, s.manifest, nullptr, nullptr,
                                            evaltrain::Setting::kPartial, cfg),
                  std::invalid_argument);
}

TEST_SUITE_END();
