#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "docgen/corpus.hpp"
#include "docgen/porter.hpp"

namespace docgen::docstore {

// One signature-description pair in the document set, keyed by the
// library-qualified primitive (e.g. "pandas.Index.get_loc").
struct ApiEntry {
  std::string key;
  std::string signature;
  std::string description;
  std::string library;
};

// Canonical entry key for an annotation: "<lib>.<primitive>" with any
// stdlib:/thirdparty: prefix stripped from the library name.
std::string make_entry_key(const std::string& library, const std::string& primitive);

struct IngestReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t dropped_empty_description = 0;
  std::size_t deduped = 0;
};

class DocumentSet {
 public:
  DocumentSet() = default;

  // Entries sharing a key collapse to the one with the longest signature
  // (first wins on ties), holding the first occurrence's position. Entries
  // with an empty description are dropped and counted, not fatal.
  static DocumentSet ingest(const std::vector<ApiEntry>& raw, IngestReport* report = nullptr);

  const std::vector<ApiEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const ApiEntry* find(const std::string& key) const;
  int index_of(const std::string& key) const;  // -1 when absent

 private:
  std::vector<ApiEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_key_;
};

std::vector<ApiEntry> load_documents_jsonl(const std::string& path);
void save_documents_jsonl(const std::string& path, const std::vector<ApiEntry>& entries);

// Sparse feature vector with a cached L2 norm; items sorted by feature id.
struct SparseVector {
  std::vector<std::pair<int, double>> items;
  double norm = 0.0;
};

// Cosine of two vectors from the same index; 0 when either norm is 0.
double cosine(const SparseVector& a, const SparseVector& b);

// tf-idf over stemmed, lowercased unigrams and bigrams. Fitted on the
// training intents plus every document description; idf(t) =
// ln((1+N)/(1+df(t))) + 1 with raw counts for tf.
class TfIdfIndex {
 public:
  static TfIdfIndex fit(const std::vector<std::string>& train_intents, const DocumentSet& docs);

  SparseVector vectorize(std::string_view text) const;
  const SparseVector& doc_vector(std::size_t doc_index) const { return doc_vectors_[doc_index]; }
  const std::string& doc_key(std::size_t doc_index) const { return doc_keys_[doc_index]; }
  std::size_t n_docs() const { return doc_vectors_.size(); }
  std::size_t n_features() const { return idf_.size(); }
  double idf(const std::string& feature) const;  // 0 when unseen

  void save(const std::string& path) const;
  static TfIdfIndex load(const std::string& path);

  // Stemmed, lowercased word tokens with punctuation removed; bigrams are
  // formed over this stream.
  static std::vector<std::string> feature_tokens(std::string_view text);

 private:
  std::unordered_map<std::string, int> feature_ids_;
  std::vector<std::string> feature_names_;
  std::vector<double> idf_;
  std::vector<SparseVector> doc_vectors_;
  std::vector<std::string> doc_keys_;
  std::string fit_note_;
};

struct RetrievalResult {
  std::string intent_id;
  int k = 0;
  std::vector<std::pair<std::string, double>> ranked;  // (entry key, score), best first
};

// Scores every entry, ranks descending with document order breaking ties,
// returns min(k, |D|) results.
RetrievalResult retrieve_topk(std::string_view intent, const DocumentSet& docs,
                              const TfIdfIndex& index, int k, std::string intent_id = "");

// The oracle setting: exactly the example's annotated entries, in annotation
// order, capped at k, score 1.0 each.
RetrievalResult oracle_retrieve(const corpus::Example& example, int k);

// Micro-averaged fraction of gold keys found in the corresponding top-k
// lists; examples with no gold keys are skipped.
double recall_at_k(const std::vector<RetrievalResult>& results,
                   const std::vector<std::vector<std::string>>& gold_keys);

}  // namespace docgen::docstore
