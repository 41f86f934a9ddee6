#pragma once

#include <span>
#include <string>
#include <vector>

#include "docgen/docstore.hpp"
#include "docgen/model.hpp"

namespace docgen::model {

struct DecodeResult {
  std::vector<std::string> tokens;  // surface symbols, EOS stripped
  double log_prob = 0.0;
  bool finished = false;  // reached EOS before the step limit
};

DecodeResult decode_greedy(ModelParams& params, const std::vector<std::string>& intent_tokens,
                           std::span<const docstore::ApiEntry> entries, int max_steps);

// Completed hypotheses are ranked by total log-probability. Guaranteed to
// never score below the greedy path (the greedy hypothesis stays in the
// candidate pool).
DecodeResult decode_beam(ModelParams& params, const std::vector<std::string>& intent_tokens,
                         std::span<const docstore::ApiEntry> entries, int beam_size,
                         int max_steps);

// Dispatches on beam_size: 1 is the greedy path.
DecodeResult decode(ModelParams& params, const std::vector<std::string>& intent_tokens,
                    std::span<const docstore::ApiEntry> entries, int beam_size, int max_steps);

}  // namespace docgen::model
