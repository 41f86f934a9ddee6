#include "docgen/docstore.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace docgen::docstore {

std::string make_entry_key(const std::string& library, const std::string& primitive) {
  std::string lib = library;
  for (const char* prefix : {"stdlib:", "thirdparty:"}) {
    if (lib.rfind(prefix, 0) == 0) {
      lib = lib.substr(std::string(prefix).size());
      break;
    }
  }
  return lib + "." + primitive;
}

DocumentSet DocumentSet::ingest(const std::vector<ApiEntry>& raw, IngestReport* report) {
  DocumentSet set;
  IngestReport local;
  local.input = raw.size();
  for (const ApiEntry& entry : raw) {
    if (entry.key.empty()) throw std::invalid_argument("document entry with empty key");
    if (entry.signature.empty()) throw std::invalid_argument("document entry with empty signature");
    if (entry.description.empty()) {
      ++local.dropped_empty_description;
      continue;
    }
    auto it = set.by_key_.find(entry.key);
    if (it == set.by_key_.end()) {
      set.by_key_[entry.key] = set.entries_.size();
      set.entries_.push_back(entry);
    } else {
      ++local.deduped;
      ApiEntry& kept = set.entries_[it->second];
      if (entry.signature.size() > kept.signature.size()) kept = entry;
    }
  }
  local.kept = set.entries_.size();
  if (report) *report = local;
  return set;
}

const ApiEntry* DocumentSet::find(const std::string& key) const {
  auto it = by_key_.find(key);
  return it == by_key_.end() ? nullptr : &entries_[it->second];
}

int DocumentSet::index_of(const std::string& key) const {
  auto it = by_key_.find(key);
  return it == by_key_.end() ? -1 : static_cast<int>(it->second);
}

std::vector<ApiEntry> load_documents_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open document set: " + path);
  std::vector<ApiEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      ApiEntry e;
      e.key = j.at("key").get<std::string>();
      e.signature = j.at("signature").get<std::string>();
      e.description = j.value("description", "");
      e.library = j.value("library", "");
      out.push_back(std::move(e));
    } catch (const std::exception& e) {
      throw std::runtime_error("documents " + path + " line " + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return out;
}

void save_documents_jsonl(const std::string& path, const std::vector<ApiEntry>& entries) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open document set for writing: " + path);
  for (const ApiEntry& e : entries) {
    nlohmann::json j{{"key", e.key},
                     {"signature", e.signature},
                     {"description", e.description},
                     {"library", e.library}};
    os << j.dump() << "\n";
  }
}

double cosine(const SparseVector& a, const SparseVector& b) {
  if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
  double dot = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.items.size() && j < b.items.size()) {
    if (a.items[i].first < b.items[j].first) {
      ++i;
    } else if (a.items[i].first > b.items[j].first) {
      ++j;
    } else {
      dot += a.items[i].second * b.items[j].second;
      ++i;
      ++j;
    }
  }
  return dot / (a.norm * b.norm);
}

std::vector<std::string> TfIdfIndex::feature_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (std::string tok : corpus::tokenize_nl(text)) {
    bool has_alnum = false;
    for (char& c : tok) {
      unsigned char uc = static_cast<unsigned char>(c);
      if (std::isalnum(uc)) has_alnum = true;
      c = static_cast<char>(std::tolower(uc));
    }
    if (!has_alnum) continue;  // punctuation carries no retrieval signal
    out.push_back(porter_stem(tok));
  }
  return out;
}

namespace {

std::unordered_map<std::string, std::size_t> term_counts(const std::vector<std::string>& tokens) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const std::string& t : tokens) ++counts[t];
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) ++counts[tokens[i] + " " + tokens[i + 1]];
  return counts;
}

void finish_norm(SparseVector& v) {
  std::sort(v.items.begin(), v.items.end());
  double sq = 0.0;
  for (const auto& [id, w] : v.items) sq += w * w;
  v.norm = std::sqrt(sq);
}

}  // namespace

TfIdfIndex TfIdfIndex::fit(const std::vector<std::string>& train_intents,
                           const DocumentSet& docs) {
  if (train_intents.empty() && docs.size() == 0) {
    throw std::invalid_argument("TfIdfIndex::fit: empty corpus");
  }
  TfIdfIndex index;

  std::vector<std::unordered_map<std::string, std::size_t>> doc_counts;
  doc_counts.reserve(train_intents.size() + docs.size());
  for (const std::string& intent : train_intents) {
    doc_counts.push_back(term_counts(feature_tokens(intent)));
  }
  for (const ApiEntry& e : docs.entries()) {
    doc_counts.push_back(term_counts(feature_tokens(e.description)));
  }

  std::unordered_map<std::string, std::size_t> df;
  for (const auto& counts : doc_counts) {
    for (const auto& [term, n] : counts) ++df[term];
  }

  std::vector<std::string> terms;
  terms.reserve(df.size());
  for (const auto& [term, n] : df) terms.push_back(term);
  std::sort(terms.begin(), terms.end());

  const double n_corpus = static_cast<double>(doc_counts.size());
  index.feature_names_ = terms;
  index.idf_.resize(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    index.feature_ids_[terms[i]] = static_cast<int>(i);
    index.idf_[i] =
        std::log((1.0 + n_corpus) / (1.0 + static_cast<double>(df[terms[i]]))) + 1.0;
  }

  index.doc_vectors_.reserve(docs.size());
  index.doc_keys_.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& counts = doc_counts[train_intents.size() + d];
    SparseVector v;
    v.items.reserve(counts.size());
    for (const auto& [term, n] : counts) {
      int id = index.feature_ids_.at(term);
      v.items.emplace_back(id, static_cast<double>(n) * index.idf_[static_cast<std::size_t>(id)]);
    }
    finish_norm(v);
    index.doc_vectors_.push_back(std::move(v));
    index.doc_keys_.push_back(docs.entries()[d].key);
  }
  index.fit_note_ = std::to_string(train_intents.size()) + " intents + " +
                    std::to_string(docs.size()) + " descriptions";
  return index;
}

SparseVector TfIdfIndex::vectorize(std::string_view text) const {
  SparseVector v;
  for (const auto& [term, n] : term_counts(feature_tokens(text))) {
    auto it = feature_ids_.find(term);
    if (it == feature_ids_.end()) continue;  // unseen features are dropped
    v.items.emplace_back(it->second, static_cast<double>(n) *
                                         idf_[static_cast<std::size_t>(it->second)]);
  }
  finish_norm(v);
  return v;
}

double TfIdfIndex::idf(const std::string& feature) const {
  auto it = feature_ids_.find(feature);
  return it == feature_ids_.end() ? 0.0 : idf_[static_cast<std::size_t>(it->second)];
}

void TfIdfIndex::save(const std::string& path) const {
  nlohmann::json j;
  j["magic"] = "docgen-tfidf";
  j["version"] = 1;
  j["fit"] = fit_note_;
  j["features"] = feature_names_;
  j["idf"] = idf_;
  j["docs"] = nlohmann::json::array();
  for (std::size_t d = 0; d < doc_vectors_.size(); ++d) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& [id, w] : doc_vectors_[d].items) items.push_back({id, w});
    j["docs"].push_back({{"key", doc_keys_[d]}, {"items", items}});
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open index for writing: " + path);
  os << j.dump() << "\n";
}

TfIdfIndex TfIdfIndex::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open index: " + path);
  nlohmann::json j;
  is >> j;
  if (j.value("magic", "") != "docgen-tfidf") {
    throw std::runtime_error("not a tf-idf index file: " + path);
  }
  if (j.value("version", 0) != 1) {
    throw std::runtime_error("unsupported index version in " + path);
  }
  TfIdfIndex index;
  index.fit_note_ = j.value("fit", "");
  index.feature_names_ = j.at("features").get<std::vector<std::string>>();
  index.idf_ = j.at("idf").get<std::vector<double>>();
  for (std::size_t i = 0; i < index.feature_names_.size(); ++i) {
    index.feature_ids_[index.feature_names_[i]] = static_cast<int>(i);
  }
  for (const auto& d : j.at("docs")) {
    SparseVector v;
    for (const auto& item : d.at("items")) {
      v.items.emplace_back(item.at(0).get<int>(), item.at(1).get<double>());
    }
    finish_norm(v);
    index.doc_vectors_.push_back(std::move(v));
    index.doc_keys_.push_back(d.at("key").get<std::string>());
  }
  return index;
}

RetrievalResult retrieve_topk(std::string_view intent, const DocumentSet& docs,
                              const TfIdfIndex& index, int k, std::string intent_id) {
  if (k < 1) throw std::invalid_argument("retrieve_topk: k must be >= 1");
  if (index.n_docs() != docs.size()) {
    throw std::invalid_argument("retrieve_topk: index fitted on a different document set");
  }
  SparseVector query = index.vectorize(intent);

  std::vector<double> scores(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) scores[d] = cosine(query, index.doc_vector(d));

  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RetrievalResult result;
  result.intent_id = std::move(intent_id);
  result.k = k;
  std::size_t take = std::min(static_cast<std::size_t>(k), docs.size());
  result.ranked.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    result.ranked.emplace_back(docs.entries()[order[i]].key, scores[order[i]]);
  }
  return result;
}

RetrievalResult oracle_retrieve(const corpus::Example& example, int k) {
  if (k < 1) throw std::invalid_argument("oracle_retrieve: k must be >= 1");
  RetrievalResult result;
  result.intent_id = example.id;
  result.k = k;
  for (const corpus::ApiAnnotation& a : example.apis) {
    if (result.ranked.size() >= static_cast<std::size_t>(k)) break;
    result.ranked.emplace_back(make_entry_key(a.library, a.primitive), 1.0);
  }
  return result;
}

double recall_at_k(const std::vector<RetrievalResult>& results,
                   const std::vector<std::vector<std::string>>& gold_keys) {
  if (results.size() != gold_keys.size()) {
    throw std::invalid_argument("recall_at_k: result/gold count mismatch");
  }
  for (const RetrievalResult& r : results) {
    if (r.k != results.front().k) {
      throw std::invalid_argument("recall_at_k: results mix different k values");
    }
  }
  std::size_t hits = 0, total = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    std::set<std::string> gold(gold_keys[i].begin(), gold_keys[i].end());
    if (gold.empty()) continue;
    total += gold.size();
    for (const auto& [key, score] : results[i].ranked) {
      if (gold.erase(key)) ++hits;
    }
  }
  if (total == 0) return 0.0;
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace docgen::docstore
