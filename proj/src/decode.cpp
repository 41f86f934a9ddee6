#include "docgen/decode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace docgen::model {

namespace {

DecodeResult run_greedy(SequenceContext& ctx, int max_steps) {
  DecodeResult result;
  SequenceContext::Step step = ctx.advance(ctx.initial_step(), corpus::Vocabulary::bos_token());
  for (int t = 0; t < max_steps; ++t) {
    StepDistribution dist = ctx.distribution(step);
    const StepDistribution::Outcome& best =
        dist.outcomes[static_cast<std::size_t>(dist.argmax())];
    result.log_prob += std::log(best.p);
    if (best.surface == corpus::Vocabulary::eos_token()) {
      result.finished = true;
      break;
    }
    result.tokens.push_back(best.surface);
    step = ctx.advance(step, best.surface);
  }
  return result;
}

}  // namespace

DecodeResult decode_greedy(ModelParams& params, const std::vector<std::string>& intent_tokens,
                           std::span<const docstore::ApiEntry> entries, int max_steps) {
  if (max_steps < 1) throw std::invalid_argument("decode: max_steps must be >= 1");
  SequenceContext ctx(params, intent_tokens, entries, /*training=*/false, nullptr);
  return run_greedy(ctx, max_steps);
}

DecodeResult decode_beam(ModelParams& params, const std::vector<std::string>& intent_tokens,
                         std::span<const docstore::ApiEntry> entries, int beam_size,
                         int max_steps) {
  if (beam_size < 1) throw std::invalid_argument("decode: beam_size must be >= 1");
  if (max_steps < 1) throw std::invalid_argument("decode: max_steps must be >= 1");

  SequenceContext ctx(params, intent_tokens, entries, /*training=*/false, nullptr);

  struct Hyp {
    std::vector<std::string> tokens;
    double log_prob = 0.0;
    SequenceContext::Step step;  // state ready to score the next emission
  };

  std::vector<Hyp> beam;
  beam.push_back(Hyp{{}, 0.0, ctx.advance(ctx.initial_step(), corpus::Vocabulary::bos_token())});

  DecodeResult completed;
  bool have_completed = false;

  for (int t = 0; t < max_steps && !beam.empty(); ++t) {
    struct Candidate {
      std::size_t parent;
      std::string surface;
      double log_prob;
      bool eos;
    };
    std::vector<Candidate> candidates;
    for (std::size_t b = 0; b < beam.size(); ++b) {
      StepDistribution dist = ctx.distribution(beam[b].step);
      for (const StepDistribution::Outcome& o : dist.outcomes) {
        candidates.push_back(Candidate{b, o.surface, beam[b].log_prob + std::log(o.p),
                                       o.surface == corpus::Vocabulary::eos_token()});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.log_prob > b.log_prob; });

    std::vector<Hyp> next;
    std::size_t take = std::min(candidates.size(), static_cast<std::size_t>(beam_size));
    for (std::size_t i = 0; i < take; ++i) {
      const Candidate& c = candidates[i];
      if (c.eos) {
        if (!have_completed || c.log_prob > completed.log_prob) {
          completed.tokens = beam[c.parent].tokens;
          completed.log_prob = c.log_prob;
          completed.finished = true;
          have_completed = true;
        }
        continue;
      }
      Hyp h;
      h.tokens = beam[c.parent].tokens;
      h.tokens.push_back(c.surface);
      h.log_prob = c.log_prob;
      h.step = ctx.advance(beam[c.parent].step, c.surface);
      next.push_back(std::move(h));
    }
    beam = std::move(next);
    // Log-probabilities only decrease with length, so once the best finished
    // hypothesis beats every live one the search is done.
    if (have_completed &&
        (beam.empty() || completed.log_prob >= beam.front().log_prob)) {
      return completed;
    }
  }

  if (have_completed) return completed;
  DecodeResult best;
  best.tokens = beam.front().tokens;
  best.log_prob = beam.front().log_prob;
  return best;
}

DecodeResult decode(ModelParams& params, const std::vector<std::string>& intent_tokens,
                    std::span<const docstore::ApiEntry> entries, int beam_size, int max_steps) {
  if (beam_size == 1) return decode_greedy(params, intent_tokens, entries, max_steps);
  DecodeResult beam = decode_beam(params, intent_tokens, entries, beam_size, max_steps);
  DecodeResult greedy = decode_greedy(params, intent_tokens, entries, max_steps);
  // Beam pruning can drop the greedy path; keep whichever scored better.
  return greedy.log_prob > beam.log_prob ? greedy : beam;
}

}  // namespace docgen::model
