#include "docgen/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_set>

#include "docgen/nn/rng.hpp"

namespace docgen::corpus {

namespace {

const std::vector<std::string> kVerbs = {
    "reverse", "sort",  "flip",  "merge", "scan",  "pad",   "trim",  "split",
    "join",    "clip",  "round", "shift", "count", "fill",  "mask",  "rank",
    "scale",   "group", "stack", "probe", "fold",  "slice", "chain", "weight"};

const std::vector<std::string> kObjects = {
    "rows",    "items",  "keys",   "values", "labels", "frames", "arrays", "columns",
    "buckets", "tokens", "pairs",  "cells",  "edges",  "nodes",  "bytes",  "lines",
    "points",  "fields", "groups", "slots",  "ranges", "shards", "blocks", "marks"};

struct Phrase {
  std::string verb;
  std::string object;
  std::string primitive() const { return verb + "_" + object; }
};

// Unique (verb, object) pairs. Each object token pairs with at most three
// verbs; further uses switch to a numbered variant, which keeps retrieved
// top-k lists from filling up with near-identical same-object entries.
std::vector<Phrase> draw_phrases(std::size_t count, nn::Rng& rng) {
  constexpr std::size_t kVerbsPerObject = 3;
  const std::size_t groups = kVerbs.size() / kVerbsPerObject;
  std::vector<Phrase> pool;
  std::size_t round = 0;
  while (pool.size() < count) {
    for (std::size_t g = 0; g < groups; ++g) {
      for (const std::string& o : kObjects) {
        std::size_t variant = round * groups + g;
        std::string token = variant == 0 ? o : o + std::to_string(variant + 1);
        for (std::size_t i = 0; i < kVerbsPerObject; ++i) {
          pool.push_back(Phrase{kVerbs[g * kVerbsPerObject + i], token});
        }
      }
    }
    ++round;
  }
  rng.shuffle(pool);
  pool.resize(count);
  return pool;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

struct Api {
  Phrase phrase;
  std::string library;       // annotation form: "builtin", bare stdlib, "thirdparty:x"
  std::string display_lib;   // how intents mention it
  std::string receiver;      // snippet receiver; empty for builtins
  bool two_args = false;
};

std::string signature_of(const Api& api) {
  std::string head = api.receiver.empty() ? api.phrase.primitive()
                                          : api.receiver + "." + api.phrase.primitive();
  return head + (api.two_args ? "(value, count)" : "(value)");
}

std::string description_of(const Api& api) {
  return capitalize(api.phrase.verb) + " the " + api.phrase.object + " of a value in " +
         api.display_lib + ".";
}

std::string snippet_of(const Api& api, const std::string& arg, const std::string& num) {
  std::string head = api.receiver.empty() ? api.phrase.primitive()
                                          : api.receiver + "." + api.phrase.primitive();
  std::string args = "'" + arg + "'";
  if (api.two_args) args += ", " + num;
  return head + "(" + args + ")";
}

std::string intent_of(const Api& api, const std::string& arg, const std::string& num,
                      std::uint64_t variant) {
  const std::string& v = api.phrase.verb;
  const std::string& o = api.phrase.object;
  std::string text;
  switch (variant % 3) {
    case 0:
      text = v + " the " + o + " of '" + arg + "' with " + api.display_lib;
      break;
    case 1:
      text = "use " + api.display_lib + " to " + v + " the " + o + " of '" + arg + "'";
      break;
    default:
      text = v + " " + o + " in '" + arg + "' via " + api.display_lib;
      break;
  }
  if (api.two_args) text += " by " + num;
  return text;
}

std::string echo_intent_of(const Api& api) {
  return api.phrase.verb + " the " + api.phrase.object + " with " + api.display_lib;
}

docstore::ApiEntry entry_of(const Api& api, bool echo) {
  docstore::ApiEntry e;
  e.key = docstore::make_entry_key(api.library, api.phrase.primitive());
  e.signature = signature_of(api);
  e.description = echo ? echo_intent_of(api) : description_of(api);
  e.library = api.library;
  return e;
}

Example example_of(const Api& api, const std::string& id, std::uint64_t variant, bool echo) {
  Example ex;
  ex.id = id;
  std::string arg = echo ? "x" : "v" + id.substr(2);
  std::string num = std::to_string(2 + variant % 9);
  ex.intent = echo ? echo_intent_of(api) : intent_of(api, arg, num, variant);
  ex.snippet = snippet_of(api, arg, num);
  ex.snippet_tokens = tokenize_snippet(ex.snippet);
  ApiAnnotation ann;
  ann.signature = signature_of(api);
  ann.description = echo ? echo_intent_of(api) : description_of(api);
  ann.library = api.library;
  ann.primitive = api.phrase.primitive();
  ex.apis.push_back(std::move(ann));
  return ex;
}

}  // namespace

SynthOutput generate_synthetic_corpus(const SynthConfig& config) {
  if (config.n_train < 1 || config.n_dev < 1 || config.n_test < 0 || config.stdlib_libs < 1 ||
      config.thirdparty_libs < 1 || config.primitives_per_lib < 1) {
    throw std::invalid_argument("generate_synthetic_corpus: sizes must be >= 1");
  }
  nn::Rng rng(config.seed);

  const std::size_t n_common_prims =
      static_cast<std::size_t>(config.stdlib_libs) *
      static_cast<std::size_t>(config.primitives_per_lib);
  const std::size_t n_tp_prims = static_cast<std::size_t>(config.thirdparty_libs) *
                                 static_cast<std::size_t>(config.primitives_per_lib);
  std::size_t n_rare = static_cast<std::size_t>(
      static_cast<double>(config.n_train) * config.rare_train_fraction);
  n_rare = std::min(n_rare, static_cast<std::size_t>(config.n_train) - 1);
  const std::size_t n_distract = static_cast<std::size_t>(config.distractor_entries);

  std::vector<Phrase> phrases =
      draw_phrases(n_common_prims + n_tp_prims + n_rare + n_distract, rng);
  std::size_t next_phrase = 0;

  SynthOutput out;
  out.allowlist.version = "synth-1";

  std::vector<Api> common;
  for (std::size_t i = 0; i < n_common_prims; ++i) {
    Api api;
    api.phrase = phrases[next_phrase++];
    std::size_t lib = i / static_cast<std::size_t>(config.primitives_per_lib);
    if (lib == 0) {
      api.library = "builtin";
      api.display_lib = "python";
    } else {
      api.library = "slib" + std::to_string(lib);
      api.display_lib = api.library;
      api.receiver = api.library;
      out.allowlist.modules.insert(api.library);
    }
    api.two_args = (i % 3 == 1) && !config.echo_descriptions;
    common.push_back(api);
    out.documents.push_back(entry_of(api, config.echo_descriptions));
  }

  std::vector<Api> thirdparty;
  for (std::size_t i = 0; i < n_tp_prims; ++i) {
    Api api;
    api.phrase = phrases[next_phrase++];
    std::size_t lib = i / static_cast<std::size_t>(config.primitives_per_lib);
    std::string name = "tplib" + std::to_string(lib + 1);
    api.library = "thirdparty:" + name;
    api.display_lib = name;
    api.receiver = name;
    api.two_args = (i % 3 == 1) && !config.echo_descriptions;
    thirdparty.push_back(api);
    out.documents.push_back(entry_of(api, config.echo_descriptions));
  }

  // Train block. Every rare slot gets a one-off library and primitive, so a
  // min_freq >= 2 vocabulary sees the same fully masked signatures the
  // third-party dev set produces.
  const std::size_t rare_stride =
      n_rare == 0 ? static_cast<std::size_t>(config.n_train) + 1
                  : static_cast<std::size_t>(config.n_train) / n_rare;
  std::size_t rare_used = 0;
  std::size_t example_idx = 0;
  for (int i = 0; i < config.n_train; ++i, ++example_idx) {
    std::string id = "ex" + std::to_string(100000 + example_idx).substr(1);
    std::uint64_t variant = rng.fork(example_idx).next_u64();
    bool rare_slot = n_rare > 0 && rare_used < n_rare &&
                     static_cast<std::size_t>(i) % rare_stride == rare_stride - 1;
    if (rare_slot) {
      Api api;
      api.phrase = phrases[next_phrase++];
      api.library = "ulib" + std::to_string(rare_used);
      api.display_lib = api.library;
      api.receiver = api.library;
      api.two_args = (rare_used % 3 == 1) && !config.echo_descriptions;
      out.allowlist.modules.insert(api.library);
      out.documents.push_back(entry_of(api, config.echo_descriptions));
      out.dataset.push_back(example_of(api, id, variant, config.echo_descriptions));
      ++rare_used;
    } else {
      const Api& api = common[static_cast<std::size_t>(i) % common.size()];
      out.dataset.push_back(example_of(api, id, variant, config.echo_descriptions));
    }
  }

  for (int i = 0; i < config.n_dev + config.n_test; ++i, ++example_idx) {
    std::string id = "ex" + std::to_string(100000 + example_idx).substr(1);
    std::uint64_t variant = rng.fork(example_idx).next_u64();
    const Api& api = thirdparty[static_cast<std::size_t>(i) % thirdparty.size()];
    out.dataset.push_back(example_of(api, id, variant, config.echo_descriptions));
  }

  for (std::size_t i = 0; i < n_distract; ++i) {
    Api api;
    api.phrase = phrases[next_phrase++];
    std::size_t lib = 1 + i % static_cast<std::size_t>(std::max(1, config.stdlib_libs - 1));
    api.library = "slib" + std::to_string(lib);
    api.display_lib = api.library;
    api.receiver = api.library;
    api.two_args = (i % 3 == 1) && !config.echo_descriptions;
    out.documents.push_back(entry_of(api, config.echo_descriptions));
  }

  // Ground truth for the library split: every third-party example carries
  // exactly one token absent from all train snippets and from its own intent
  // (its primitive), independent of how the pool is shuffled into dev/test.
  std::unordered_set<std::string> train_tokens;
  for (int i = 0; i < config.n_train; ++i) {
    for (const std::string& tok : out.dataset[static_cast<std::size_t>(i)].snippet_tokens) {
      train_tokens.insert(tok);
    }
  }
  for (std::size_t i = static_cast<std::size_t>(config.n_train); i < out.dataset.size(); ++i) {
    const Example& ex = out.dataset[i];
    std::unordered_set<std::string> intent_tokens;
    for (const std::string& tok : tokenize_nl(ex.intent)) intent_tokens.insert(tok);
    std::unordered_set<std::string> seen;
    int oov = 0;
    for (const std::string& tok : ex.snippet_tokens) {
      if (!seen.insert(tok).second) continue;
      if (!train_tokens.count(tok) && !intent_tokens.count(tok)) ++oov;
    }
    if (oov != 1) {
      throw std::logic_error("synthetic corpus: example " + ex.id + " has " +
                             std::to_string(oov) + " OOV tokens, expected 1");
    }
  }

  out.expected = nlohmann::json{{"split_kind", "library"},
                                {"min_freq", 1},
                                {"n_train", config.n_train},
                                {"n_dev", config.n_dev},
                                {"n_test", config.n_test},
                                {"oov_primitives", config.n_dev},
                                {"oov_examples", config.n_dev},
                                {"pct_oov_examples", 100},
                                {"oov_per_thirdparty_example", 1}};
  return out;
}

}  // namespace docgen::corpus
