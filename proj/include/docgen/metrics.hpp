#pragma once

#include <string>
#include <vector>

#include "docgen/corpus.hpp"

namespace docgen::evaltrain {

// Corpus-level token BLEU-4 in [0, 100]: modified n-gram precisions with
// add-one smoothing when a precision of order >= 2 is zero, geometric mean,
// and a brevity penalty over total lengths.
double corpus_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                   const std::vector<std::vector<std::string>>& references);

// Per-example out-of-vocabulary gold tokens (absent from both the vocabulary
// and that example's intent) found anywhere in the hypothesis, as a
// percentage of all such tokens. Returns 0 when the OOV set is empty.
struct OovRecall {
  int found = 0;
  int total = 0;
  double percent() const { return total == 0 ? 0.0 : 100.0 * found / total; }
};

OovRecall oov_recall(const std::vector<std::vector<std::string>>& hypotheses,
                     const std::vector<const corpus::Example*>& examples,
                     const corpus::Vocabulary& vocab);

// The OOV token set of one example under a vocabulary (unique tokens).
std::vector<std::string> oov_tokens(const corpus::Example& example,
                                    const corpus::Vocabulary& vocab);

}  // namespace docgen::evaltrain
