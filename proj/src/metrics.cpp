#include "docgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace docgen::evaltrain {

namespace {

constexpr int kMaxOrder = 4;

std::unordered_map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& tokens,
                                                          int order) {
  std::unordered_map<std::string, std::size_t> counts;
  if (static_cast<int>(tokens.size()) < order) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(order) <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int n = 1; n < order; ++n) {
      key.push_back('\x1f');
      key += tokens[i + static_cast<std::size_t>(n)];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double corpus_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                   const std::vector<std::vector<std::string>>& references) {
  if (hypotheses.size() != references.size()) {
    throw std::invalid_argument("corpus_bleu: " + std::to_string(hypotheses.size()) +
                                " hypotheses vs " + std::to_string(references.size()) +
                                " references");
  }
  if (hypotheses.empty()) throw std::invalid_argument("corpus_bleu: empty corpus");

  std::size_t matches[kMaxOrder] = {0, 0, 0, 0};
  std::size_t totals[kMaxOrder] = {0, 0, 0, 0};
  std::size_t hyp_len = 0, ref_len = 0;

  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_len += hypotheses[i].size();
    ref_len += references[i].size();
    for (int order = 1; order <= kMaxOrder; ++order) {
      auto hyp_counts = ngram_counts(hypotheses[i], order);
      auto ref_counts = ngram_counts(references[i], order);
      for (const auto& [gram, n] : hyp_counts) {
        totals[order - 1] += n;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matches[order - 1] += std::min(n, it->second);
      }
    }
  }

  if (hyp_len == 0) return ref_len == 0 ? 100.0 : 0.0;

  double log_precision_sum = 0.0;
  for (int order = 1; order <= kMaxOrder; ++order) {
    std::size_t m = matches[order - 1], t = totals[order - 1];
    double p;
    if (t == 0) {
      p = 1.0;  // no n-grams of this order exist at all
    } else if (m > 0) {
      p = static_cast<double>(m) / static_cast<double>(t);
    } else if (order >= 2) {
      p = 1.0 / static_cast<double>(t + 1);  // add-one smoothing
    } else {
      return 0.0;  // zero unigram precision
    }
    log_precision_sum += std::log(p);
  }

  double bp = hyp_len >= ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * bp * std::exp(log_precision_sum / kMaxOrder);
}

std::vector<std::string> oov_tokens(const corpus::Example& example,
                                    const corpus::Vocabulary& vocab) {
  std::unordered_set<std::string> intent_tokens;
  for (const std::string& tok : corpus::tokenize_nl(example.intent)) intent_tokens.insert(tok);

  std::vector<std::string> oov;
  std::unordered_set<std::string> seen;
  for (const std::string& tok : example.snippet_tokens) {
    if (!seen.insert(tok).second) continue;
    if (!vocab.contains(tok) && !intent_tokens.count(tok)) oov.push_back(tok);
  }
  return oov;
}

OovRecall oov_recall(const std::vector<std::vector<std::string>>& hypotheses,
                     const std::vector<const corpus::Example*>& examples,
                     const corpus::Vocabulary& vocab) {
  if (hypotheses.size() != examples.size()) {
    throw std::invalid_argument("oov_recall: hypothesis/example count mismatch");
  }
  OovRecall recall;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    std::unordered_set<std::string> hyp_tokens(hypotheses[i].begin(), hypotheses[i].end());
    for (const std::string& tok : oov_tokens(*examples[i], vocab)) {
      ++recall.total;
      if (hyp_tokens.count(tok)) ++recall.found;
    }
  }
  return recall;
}

}  // namespace docgen::evaltrain
