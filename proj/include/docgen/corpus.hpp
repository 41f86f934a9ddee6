#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace docgen::corpus {

// One documented API reference attached to an example. `library` is either
// "builtin", a bare stdlib module name (resolved through the allowlist), or
// an explicit "stdlib:<name>" / "thirdparty:<name>".
struct ApiAnnotation {
  std::string signature;
  std::string description;
  std::string library;
  std::string primitive;
};

// One (intent, snippet) pair with its API annotations.
struct Example {
  std::string id;
  std::string intent;
  std::string snippet;
  std::vector<std::string> snippet_tokens;  // tokenize_snippet(snippet)
  std::vector<ApiAnnotation> apis;

  std::set<std::string> libraries() const;
};

// Identifier runs ([A-Za-z0-9_]+) become single tokens, every other
// non-whitespace character is its own token, whitespace separates.
std::vector<std::string> tokenize_snippet(std::string_view text);
std::vector<std::string> tokenize_nl(std::string_view text);

// Output-snippet vocabulary: fixed specials then content tokens ordered by
// descending training frequency, ties lexicographic.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kFirstContent = 4;

  static const std::string& pad_token();
  static const std::string& unk_token();
  static const std::string& bos_token();
  static const std::string& eos_token();

  std::vector<std::string> tokens;  // id -> surface
  std::unordered_map<std::string, int> index;
  int min_freq = 1;

  int size() const { return static_cast<int>(tokens.size()); }
  bool contains(const std::string& token) const { return index.count(token) > 0; }
  int id_or_unk(const std::string& token) const;
  bool is_content(int id) const { return id >= kFirstContent; }
};

// min_freq >= 1; tokens below the threshold fall out of the vocabulary.
Vocabulary build_vocabulary(const std::vector<Example>& train_examples, int min_freq);

enum class SplitKind { kRandom, kLibrary };

std::string to_string(SplitKind kind);
SplitKind split_kind_from_string(const std::string& s);

struct SplitManifest {
  SplitKind kind = SplitKind::kRandom;
  std::uint64_t seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;
  std::string stdlib_allowlist_version;  // library split only
};

struct Allowlist {
  std::set<std::string> modules;
  std::string version = "unversioned";
};

Allowlist load_allowlist(const std::string& path);
void save_allowlist(const std::string& path, const Allowlist& allowlist);

enum class LibClass { kBuiltin, kStdlib, kThirdparty };

// Throws std::runtime_error naming the library when it cannot be classified.
LibClass classify_library(const std::string& library, const Allowlist& allowlist);

struct SplitConfig {
  SplitKind kind = SplitKind::kLibrary;
  std::uint64_t seed = 1;
  int dev_size = 200;
  int test_size = 500;  // random split only; library split keeps the remainder
};

// Library split: examples touching only builtin/stdlib libraries train; the
// third-party pool is shuffled into dev/test. Random split: seeded shuffle
// into (rest, dev_size, test_size).
SplitManifest plan_split(const std::vector<Example>& dataset, const SplitConfig& config,
                         const Allowlist& allowlist, std::ostream* warnings = nullptr);

struct DatasetStats {
  int n_train = 0;
  int n_dev = 0;
  int n_test = 0;
  int oov_primitives = 0;
  int oov_examples = 0;
  int pct_oov_examples = 0;
};

// OOV accounting over the dev set: unique (example, token) pairs whose token
// is neither in the vocabulary nor in that example's intent tokens.
DatasetStats compute_oov_stats(const std::vector<Example>& dataset, const SplitManifest& manifest,
                               const Vocabulary& vocab);

std::string format_stats_table(const DatasetStats& stats);

// JSON-lines dataset file; errors carry the offending line number.
std::vector<Example> load_dataset_jsonl(const std::string& path);
void save_dataset_jsonl(const std::string& path, const std::vector<Example>& dataset);

SplitManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const SplitManifest& manifest);

}  // namespace docgen::corpus
