#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "docgen/nn/graph.hpp"

namespace docgen::nn {

// Checkpoint container: magic + versioned JSON header (parameter manifest and
// caller metadata) followed by raw little-endian doubles and an FNV-1a
// checksum of the data section.
void save_checkpoint(const std::string& path, const ParameterStore& store,
                     const nlohmann::json& meta);

// Recreates every parameter recorded in the file inside `store` (which must
// not already contain them) and returns the caller metadata. Fails on bad
// magic, version, or checksum.
nlohmann::json load_checkpoint(const std::string& path, ParameterStore& store);

// Fills parameters that already exist in `store`; every recorded name must be
// present with a matching shape.
nlohmann::json load_checkpoint_into(const std::string& path, ParameterStore& store);

// Reads only the metadata header.
nlohmann::json read_checkpoint_meta(const std::string& path);

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 1469598103934665603ULL);

// word2vec-style text embeddings: "word v1 v2 ... vN" per line, with an
// optional "count dim" header line. Throws if a vector width differs from
// `dim`.
std::unordered_map<std::string, std::vector<double>> load_word2vec_text(const std::string& path,
                                                                        std::size_t dim);

}  // namespace docgen::nn
