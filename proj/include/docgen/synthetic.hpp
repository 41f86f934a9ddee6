#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "docgen/corpus.hpp"
#include "docgen/docstore.hpp"

namespace docgen::corpus {

// Desk-scale generated corpus: intents phrased from a (verb, object) phrase
// bank, snippets of the form lib.verb_object('vN'), and a matching document
// set. Third-party primitives never occur in train snippets or in their own
// intents, so the library split always has a known out-of-vocabulary set.
struct SynthConfig {
  int n_train = 2000;
  int n_dev = 200;
  int n_test = 200;
  int stdlib_libs = 6;       // frequent stdlib libraries (the first acts as builtin)
  int thirdparty_libs = 4;
  int primitives_per_lib = 5;
  double rare_train_fraction = 0.10;  // train examples with a one-off library+primitive
  int distractor_entries = 40;        // document entries no example uses
  std::uint64_t seed = 1;
  bool echo_descriptions = false;     // description text equals the intent text
};

struct SynthOutput {
  std::vector<Example> dataset;                 // train block first, then third-party pool
  std::vector<docstore::ApiEntry> documents;
  Allowlist allowlist;
  nlohmann::json expected;  // ground-truth counts for the library split
};

SynthOutput generate_synthetic_corpus(const SynthConfig& config);

}  // namespace docgen::corpus
