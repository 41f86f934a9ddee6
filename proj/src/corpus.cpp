#include "docgen/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "docgen/nn/rng.hpp"

namespace docgen::corpus {

namespace {

bool is_word_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
                                        c == '\f' || c == '\v'; }

std::vector<std::string> split_word_runs(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_char(c)) {
      current.push_back(static_cast<char>(c));
      continue;
    }
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
    if (!is_space(c)) tokens.push_back(std::string(1, static_cast<char>(c)));
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

}  // namespace

std::set<std::string> Example::libraries() const {
  std::set<std::string> libs;
  for (const ApiAnnotation& a : apis) libs.insert(a.library);
  return libs;
}

std::vector<std::string> tokenize_snippet(std::string_view text) { return split_word_runs(text); }

std::vector<std::string> tokenize_nl(std::string_view text) { return split_word_runs(text); }

const std::string& Vocabulary::pad_token() {
  static const std::string t = "<pad>";
  return t;
}
const std::string& Vocabulary::unk_token() {
  static const std::string t = "<unk>";
  return t;
}
const std::string& Vocabulary::bos_token() {
  static const std::string t = "<s>";
  return t;
}
const std::string& Vocabulary::eos_token() {
  static const std::string t = "</s>";
  return t;
}

int Vocabulary::id_or_unk(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? kUnk : it->second;
}

Vocabulary build_vocabulary(const std::vector<Example>& train_examples, int min_freq) {
  if (min_freq < 1) {
    throw std::invalid_argument("build_vocabulary: min_freq must be >= 1, got " +
                                std::to_string(min_freq));
  }
  if (train_examples.empty()) {
    throw std::invalid_argument("build_vocabulary: empty training set");
  }

  std::unordered_map<std::string, std::size_t> freq;
  for (const Example& ex : train_examples) {
    for (const std::string& tok : ex.snippet_tokens) ++freq[tok];
  }

  std::vector<std::pair<std::string, std::size_t>> kept;
  kept.reserve(freq.size());
  for (auto& [tok, n] : freq) {
    if (n >= static_cast<std::size_t>(min_freq)) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.min_freq = min_freq;
  vocab.tokens = {Vocabulary::pad_token(), Vocabulary::unk_token(), Vocabulary::bos_token(),
                  Vocabulary::eos_token()};
  for (auto& [tok, n] : kept) vocab.tokens.push_back(tok);
  for (int i = 0; i < vocab.size(); ++i) vocab.index[vocab.tokens[i]] = i;
  return vocab;
}

std::string to_string(SplitKind kind) {
  return kind == SplitKind::kRandom ? "random" : "library";
}

SplitKind split_kind_from_string(const std::string& s) {
  if (s == "random") return SplitKind::kRandom;
  if (s == "library") return SplitKind::kLibrary;
  throw std::invalid_argument("unknown split kind: " + s);
}

Allowlist load_allowlist(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open allowlist: " + path);
  Allowlist out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    std::size_t end = line.find_last_not_of(" \t");
    std::string trimmed = line.substr(start, end - start + 1);
    if (trimmed[0] == '#') {
      const std::string prefix = "# version:";
      if (trimmed.rfind(prefix, 0) == 0) {
        std::string v = trimmed.substr(prefix.size());
        std::size_t vs = v.find_first_not_of(" \t");
        if (vs != std::string::npos) out.version = v.substr(vs);
      }
      continue;
    }
    out.modules.insert(trimmed);
  }
  return out;
}

void save_allowlist(const std::string& path, const Allowlist& allowlist) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open allowlist for writing: " + path);
  os << "# version: " << allowlist.version << "\n";
  for (const std::string& m : allowlist.modules) os << m << "\n";
}

LibClass classify_library(const std::string& library, const Allowlist& allowlist) {
  if (library == "builtin") return LibClass::kBuiltin;
  const std::string stdlib_prefix = "stdlib:";
  const std::string thirdparty_prefix = "thirdparty:";
  if (library.rfind(stdlib_prefix, 0) == 0 && library.size() > stdlib_prefix.size()) {
    return LibClass::kStdlib;
  }
  if (library.rfind(thirdparty_prefix, 0) == 0 && library.size() > thirdparty_prefix.size()) {
    return LibClass::kThirdparty;
  }
  if (allowlist.modules.count(library)) return LibClass::kStdlib;
  throw std::runtime_error("unclassifiable library name: \"" + library +
                           "\" (not builtin, not in the stdlib allowlist, and not prefixed "
                           "stdlib:/thirdparty:)");
}

SplitManifest plan_split(const std::vector<Example>& dataset, const SplitConfig& config,
                         const Allowlist& allowlist, std::ostream* warnings) {
  if (config.dev_size < 0 || config.test_size < 0) {
    throw std::invalid_argument("plan_split: negative split size");
  }
  SplitManifest manifest;
  manifest.kind = config.kind;
  manifest.seed = config.seed;

  if (config.kind == SplitKind::kRandom) {
    std::vector<std::string> ids;
    ids.reserve(dataset.size());
    for (const Example& ex : dataset) ids.push_back(ex.id);
    if (static_cast<int>(ids.size()) < config.dev_size + config.test_size) {
      throw std::invalid_argument("plan_split: dataset of " + std::to_string(ids.size()) +
                                  " examples is smaller than dev+test sizes");
    }
    nn::Rng rng(config.seed);
    rng.shuffle(ids);
    std::size_t n_train = ids.size() - static_cast<std::size_t>(config.dev_size) -
                          static_cast<std::size_t>(config.test_size);
    manifest.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    manifest.dev.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                        ids.begin() + static_cast<std::ptrdiff_t>(n_train + config.dev_size));
    manifest.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + config.dev_size),
                         ids.end());
    return manifest;
  }

  manifest.stdlib_allowlist_version = allowlist.version;
  std::vector<std::string> pure;
  std::vector<std::string> thirdparty;
  for (const Example& ex : dataset) {
    bool uses_thirdparty = false;
    for (const std::string& lib : ex.libraries()) {
      if (classify_library(lib, allowlist) == LibClass::kThirdparty) {
        uses_thirdparty = true;
        break;
      }
    }
    (uses_thirdparty ? thirdparty : pure).push_back(ex.id);
  }

  manifest.train = std::move(pure);
  if (thirdparty.empty()) {
    if (warnings) {
      *warnings << "warning: no third-party examples; dev and test splits are empty\n";
    }
    return manifest;
  }
  nn::Rng rng(config.seed);
  rng.shuffle(thirdparty);
  std::size_t n_dev = std::min(thirdparty.size(), static_cast<std::size_t>(config.dev_size));
  manifest.dev.assign(thirdparty.begin(), thirdparty.begin() + static_cast<std::ptrdiff_t>(n_dev));
  manifest.test.assign(thirdparty.begin() + static_cast<std::ptrdiff_t>(n_dev), thirdparty.end());
  return manifest;
}

DatasetStats compute_oov_stats(const std::vector<Example>& dataset, const SplitManifest& manifest,
                               const Vocabulary& vocab) {
  std::unordered_map<std::string, const Example*> by_id;
  for (const Example& ex : dataset) by_id[ex.id] = &ex;

  DatasetStats stats;
  stats.n_train = static_cast<int>(manifest.train.size());
  stats.n_dev = static_cast<int>(manifest.dev.size());
  stats.n_test = static_cast<int>(manifest.test.size());

  for (const std::string& id : manifest.dev) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw std::runtime_error("manifest id not in dataset: " + id);
    const Example& ex = *it->second;

    std::unordered_set<std::string> intent_tokens;
    for (const std::string& tok : tokenize_nl(ex.intent)) intent_tokens.insert(tok);

    std::unordered_set<std::string> seen;
    int oov_here = 0;
    for (const std::string& tok : ex.snippet_tokens) {
      if (!seen.insert(tok).second) continue;
      if (!vocab.contains(tok) && !intent_tokens.count(tok)) ++oov_here;
    }
    stats.oov_primitives += oov_here;
    if (oov_here > 0) ++stats.oov_examples;
  }
  stats.pct_oov_examples =
      stats.n_dev == 0
          ? 0
          : static_cast<int>(std::lround(100.0 * stats.oov_examples / stats.n_dev));
  return stats;
}

std::string format_stats_table(const DatasetStats& stats) {
  std::ostringstream os;
  os << "# Train           " << stats.n_train << "\n";
  os << "# Dev             " << stats.n_dev << "\n";
  os << "# Test            " << stats.n_test << "\n";
  os << "# OOV primitives  " << stats.oov_primitives << "\n";
  os << "# OOV examples    " << stats.oov_examples << "\n";
  os << "% OOV examples    " << stats.pct_oov_examples << "\n";
  return os.str();
}

namespace {

Example example_from_json(const nlohmann::json& j) {
  Example ex;
  ex.id = j.at("id").get<std::string>();
  ex.intent = j.at("intent").get<std::string>();
  ex.snippet = j.at("snippet").get<std::string>();
  ex.snippet_tokens = tokenize_snippet(ex.snippet);
  if (j.contains("apis")) {
    for (const auto& a : j.at("apis")) {
      ApiAnnotation ann;
      ann.signature = a.at("signature").get<std::string>();
      ann.description = a.at("description").get<std::string>();
      ann.library = a.at("library").get<std::string>();
      ann.primitive = a.at("primitive").get<std::string>();
      if (ann.primitive.empty()) throw std::runtime_error("annotation with empty primitive");
      if (ann.signature.empty()) throw std::runtime_error("annotation with empty signature");
      ex.apis.push_back(std::move(ann));
    }
  }
  return ex;
}

nlohmann::json example_to_json(const Example& ex) {
  nlohmann::json j;
  j["id"] = ex.id;
  j["intent"] = ex.intent;
  j["snippet"] = ex.snippet;
  j["apis"] = nlohmann::json::array();
  for (const ApiAnnotation& a : ex.apis) {
    j["apis"].push_back({{"signature", a.signature},
                         {"description", a.description},
                         {"library", a.library},
                         {"primitive", a.primitive}});
  }
  return j;
}

}  // namespace

std::vector<Example> load_dataset_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open dataset: " + path);
  std::vector<Example> dataset;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      Example ex = example_from_json(nlohmann::json::parse(line));
      if (!ids.insert(ex.id).second) throw std::runtime_error("duplicate example id " + ex.id);
      dataset.push_back(std::move(ex));
    } catch (const std::exception& e) {
      throw std::runtime_error("dataset " + path + " line " + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return dataset;
}

void save_dataset_jsonl(const std::string& path, const std::vector<Example>& dataset) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open dataset for writing: " + path);
  for (const Example& ex : dataset) os << example_to_json(ex).dump() << "\n";
}

SplitManifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest: " + path);
  nlohmann::json j;
  is >> j;
  SplitManifest m;
  m.kind = split_kind_from_string(j.at("kind").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.train = j.at("train").get<std::vector<std::string>>();
  m.dev = j.at("dev").get<std::vector<std::string>>();
  m.test = j.at("test").get<std::vector<std::string>>();
  if (j.contains("stdlib_allowlist_version")) {
    m.stdlib_allowlist_version = j.at("stdlib_allowlist_version").get<std::string>();
  }
  return m;
}

void save_manifest(const std::string& path, const SplitManifest& manifest) {
  nlohmann::json j;
  j["kind"] = to_string(manifest.kind);
  j["seed"] = manifest.seed;
  j["train"] = manifest.train;
  j["dev"] = manifest.dev;
  j["test"] = manifest.test;
  if (manifest.kind == SplitKind::kLibrary) {
    j["stdlib_allowlist_version"] = manifest.stdlib_allowlist_version;
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open manifest for writing: " + path);
  os << j.dump(2) << "\n";
}

}  // namespace docgen::corpus
