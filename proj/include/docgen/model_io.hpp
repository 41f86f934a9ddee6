#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "docgen/model.hpp"

namespace docgen::model {

// A model checkpoint bundles the weights with the config and both
// vocabularies, so decoding needs nothing but the file.
void save_model(const std::string& path, const ModelParams& params,
                const nlohmann::json& train_meta);

struct LoadedModel {
  std::unique_ptr<ModelParams> params;
  nlohmann::json train_meta;
};

LoadedModel load_model(const std::string& path);

}  // namespace docgen::model
