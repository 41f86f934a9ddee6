#include "docgen/model_io.hpp"

#include <stdexcept>

#include "docgen/nn/serialize.hpp"

namespace docgen::model {

void save_model(const std::string& path, const ModelParams& params,
                const nlohmann::json& train_meta) {
  nlohmann::json meta;
  meta["format"] = "docgen-model";
  meta["version"] = 1;
  meta["config"] = params.config().to_json();
  meta["vocab"] = {{"tokens", params.vocab().tokens}, {"min_freq", params.vocab().min_freq}};
  meta["nl_vocab"] = {{"tokens", params.nl_vocab().tokens}};
  meta["train"] = train_meta;
  nn::save_checkpoint(path, params.store(), meta);
}

LoadedModel load_model(const std::string& path) {
  nlohmann::json meta = nn::read_checkpoint_meta(path);
  if (meta.value("format", "") != "docgen-model") {
    throw std::runtime_error("not a model checkpoint: " + path);
  }
  if (meta.value("version", 0) != 1) {
    throw std::runtime_error("unsupported model checkpoint version in " + path);
  }

  ModelConfig config = ModelConfig::from_json(meta.at("config"));

  corpus::Vocabulary vocab;
  vocab.tokens = meta.at("vocab").at("tokens").get<std::vector<std::string>>();
  vocab.min_freq = meta.at("vocab").at("min_freq").get<int>();
  for (int i = 0; i < vocab.size(); ++i) {
    vocab.index[vocab.tokens[static_cast<std::size_t>(i)]] = i;
  }

  NlVocab nl_vocab;
  nl_vocab.tokens = meta.at("nl_vocab").at("tokens").get<std::vector<std::string>>();
  for (int i = 0; i < nl_vocab.size(); ++i) {
    nl_vocab.index[nl_vocab.tokens[static_cast<std::size_t>(i)]] = i;
  }

  LoadedModel loaded;
  nn::Rng init_rng(0);  // every value is overwritten by the checkpoint
  loaded.params = std::make_unique<ModelParams>(config, vocab, nl_vocab, init_rng);
  nn::load_checkpoint_into(path, loaded.params->store());
  loaded.train_meta = meta.at("train");
  return loaded;
}

}  // namespace docgen::model
