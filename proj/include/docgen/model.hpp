#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "docgen/corpus.hpp"
#include "docgen/docstore.hpp"
#include "docgen/nn/graph.hpp"
#include "docgen/nn/layers.hpp"

namespace docgen::model {

struct ModelConfig {
  int nl_embed_dim = 300;
  int code_embed_dim = 256;
  int output_embed_dim = 256;
  int encoder_hidden = 256;  // tuned over {128, 256, 384}
  double dropout = 0.5;      // tuned over {0.3, 0.5}
  int beam_size = 15;
  int max_decode_steps = 60;
  int k = 5;
  bool share_nl_encoder = true;       // descriptions reuse the intent encoder
  bool strict_selective_read = false; // raw-sum selective-read normalization

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Natural-language-side vocabulary (intents and descriptions); id 0 is the
// unknown-word fallback.
struct NlVocab {
  static constexpr int kUnk = 0;

  std::vector<std::string> tokens;
  std::unordered_map<std::string, int> index;

  int size() const { return static_cast<int>(tokens.size()); }
  int id_or_unk(const std::string& token) const;

  static NlVocab build(const std::vector<std::string>& texts);
};

// Embedding-side surface of the FUNC placeholder used for masked signature
// prefixes. It is not part of the output vocabulary.
const std::string& func_token();

// Replaces out-of-vocabulary tokens before the first "(" (or everywhere when
// there is no parenthesis) with the FUNC placeholder. Embedding input only;
// copy candidates keep the original surfaces.
std::vector<std::string> mask_signature(const std::vector<std::string>& signature_tokens,
                                        const corpus::Vocabulary& vocab);

// All trainable weights plus the vocabularies they are shaped by.
class ModelParams {
 public:
  ModelParams(const ModelConfig& config, const corpus::Vocabulary& vocab, const NlVocab& nl_vocab,
              nn::Rng& init_rng,
              const std::unordered_map<std::string, std::vector<double>>* pretrained_nl = nullptr);

  const ModelConfig& config() const { return config_; }
  const corpus::Vocabulary& vocab() const { return vocab_; }
  const NlVocab& nl_vocab() const { return nl_vocab_; }
  nn::ParameterStore& store() { return store_; }
  const nn::ParameterStore& store() const { return store_; }

  std::size_t state_width() const { return 2 * static_cast<std::size_t>(config_.encoder_hidden); }
  std::size_t func_row() const { return static_cast<std::size_t>(vocab_.size()); }
  int code_embed_id(const std::string& masked_token) const;

  // Generation outcomes: every vocabulary id except PAD and BOS.
  const std::vector<int>& gen_ids() const { return gen_ids_; }
  int gen_position(int vocab_id) const;  // position within gen_ids, -1 if excluded

  nn::Parameter* nl_embed = nullptr;
  nn::Parameter* code_embed = nullptr;  // last row embeds FUNC
  nn::Parameter* out_embed = nullptr;
  nn::BiLstmWeights enc_nl;
  nn::BiLstmWeights enc_desc;  // aliases enc_nl when the encoder is shared
  nn::BiLstmWeights enc_sg;
  nn::Parameter* att_doc_w = nullptr;
  nn::Parameter* att_dec_w = nullptr;
  nn::Parameter* copy_w = nullptr;
  nn::Parameter* copy_b = nullptr;
  nn::Parameter* gen_w = nullptr;
  nn::Parameter* gen_b = nullptr;   // output projection bias
  nn::Parameter* dec_in_w = nullptr;
  nn::Parameter* dec_in_b = nullptr;  // decoder-input projection bias
  nn::LstmWeights dec;

 private:
  ModelConfig config_;
  corpus::Vocabulary vocab_;
  NlVocab nl_vocab_;
  nn::ParameterStore store_;
  std::vector<int> gen_ids_;
  std::vector<int> gen_pos_;  // vocab id -> position in gen_ids_, -1 if excluded
};

// The per-example symbol set M with the hidden representations each symbol
// can be copied from. Slots are rep positions: intent tokens first, then
// every encoded signature's tokens in order.
struct CopyCandidateIndex {
  std::vector<std::string> symbols;                    // M, first-occurrence order
  std::unordered_map<std::string, int> symbol_id;
  std::vector<std::string> slot_symbols;               // surface per rep slot
  std::vector<std::vector<int>> slots_of_symbol;       // symbol id -> rep slots

  int find(const std::string& symbol) const;
  std::size_t n_slots() const { return slot_symbols.size(); }
  std::size_t n_symbols() const { return symbols.size(); }
};

CopyCandidateIndex build_copy_index(const std::vector<std::string>& intent_tokens,
                                    const std::vector<std::vector<std::string>>& signatures);

// The merged emission distribution over V + UNK + M at one decoder state.
// Generation-route outcomes come first (vocabulary order), then copy-only
// symbols. A surface living in both routes is one outcome with p = q_g + q_c.
struct StepDistribution {
  struct Outcome {
    std::string surface;
    double p = 0.0;
    double q_g = 0.0;
    double q_c = 0.0;
    int vocab_id = -1;   // -1 for copy-only outcomes
    int symbol_id = -1;  // -1 for outcomes outside M
  };
  std::vector<Outcome> outcomes;

  double total() const;
  int argmax() const;  // first maximal p
  const Outcome* find(const std::string& surface) const;
};

// Everything encoded for one example inside one graph: intent and signature
// representations, the copy index, and the decoder step builders. Works for
// both training (teacher forcing + backward) and decoding.
class SequenceContext {
 public:
  SequenceContext(ModelParams& params, const std::vector<std::string>& intent_tokens,
                  std::span<const docstore::ApiEntry> entries, bool training,
                  nn::Rng* dropout_rng);

  struct Step {
    nn::Graph::Ref z = nn::Graph::npos;
    nn::Graph::Ref cell = nn::Graph::npos;
    std::string consumed;                   // symbol that produced this state
    std::vector<nn::Graph::Ref> copy_read;  // f_c(h_i, z) per rep slot
  };

  struct StepDebug {
    nn::Graph::Ref attentive = nn::Graph::npos;  // l_t
    nn::Graph::Ref selective = nn::Graph::npos;  // u_t
  };

  // Decoder state before any symbol has been consumed.
  Step initial_step();
  // Consumes c_{t-1} and returns the next state.
  Step advance(const Step& prev, const std::string& emitted, StepDebug* debug = nullptr);

  struct Scores {
    nn::Graph::Ref gen = nn::Graph::npos;   // psi_g over the full vocabulary
    nn::Graph::Ref copy = nn::Graph::npos;  // psi_c per symbol of M; npos when M is empty
  };
  Scores scores(const Step& step);

  StepDistribution distribution(const Step& step);

  // -ln p(gold) as a graph node, combining generation and copy routes.
  nn::Graph::Ref step_nll(const Step& step, const std::string& gold);

  const CopyCandidateIndex& index() const { return index_; }
  const std::vector<std::string>& intent_tokens() const { return intent_tokens_; }
  std::size_t skipped_entries() const { return skipped_entries_; }
  nn::Graph& graph() { return graph_; }
  ModelParams& params() { return params_; }
  nn::Graph::Ref rep(std::size_t slot) const { return reps_[slot]; }

 private:
  nn::Graph::Ref encode_intent();
  void encode_entry(const docstore::ApiEntry& entry,
                    std::vector<std::vector<std::string>>& signatures);
  nn::Graph::Ref embed_nl(const std::string& token);
  nn::Graph::Ref embed_code(const std::string& masked_token);

  ModelParams& params_;
  nn::Graph graph_;
  bool training_;
  nn::Rng* dropout_rng_;
  std::vector<std::string> intent_tokens_;
  std::vector<nn::Graph::Ref> reps_;       // H: intent reps then signature reps
  std::vector<nn::Graph::Ref> copy_keys_;  // tanh(W_c h + b_c) per rep slot
  CopyCandidateIndex index_;
  nn::Graph::Ref init_z_ = nn::Graph::npos;
  nn::Graph::Ref init_cell_ = nn::Graph::npos;
  std::size_t skipped_entries_ = 0;
};

struct LossOptions {
  bool training = true;
  nn::Rng* dropout_rng = nullptr;
  bool backprop = false;
  double grad_scale = 1.0;
};

// Teacher-forced -sum_t ln p(gold_t) over the snippet tokens plus EOS.
// With backprop set, gradients (scaled by grad_scale) are accumulated into
// the parameter store.
double example_loss(ModelParams& params, const corpus::Example& example,
                    std::span<const docstore::ApiEntry> entries, const LossOptions& options);

}  // namespace docgen::model
