#include "docgen/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace docgen::model {

void ModelConfig::validate() const {
  if (nl_embed_dim < 1 || code_embed_dim < 1 || output_embed_dim < 1 || encoder_hidden < 1) {
    throw std::invalid_argument("model config: all dimensions must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw std::invalid_argument("model config: dropout must be in [0, 1)");
  }
  if (beam_size < 1 || max_decode_steps < 1 || k < 1) {
    throw std::invalid_argument("model config: beam_size, max_decode_steps, k must be >= 1");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return nlohmann::json{{"nl_embed_dim", nl_embed_dim},
                        {"code_embed_dim", code_embed_dim},
                        {"output_embed_dim", output_embed_dim},
                        {"encoder_hidden", encoder_hidden},
                        {"dropout", dropout},
                        {"beam_size", beam_size},
                        {"max_decode_steps", max_decode_steps},
                        {"k", k},
                        {"share_nl_encoder", share_nl_encoder},
                        {"strict_selective_read", strict_selective_read}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.nl_embed_dim = j.value("nl_embed_dim", c.nl_embed_dim);
  c.code_embed_dim = j.value("code_embed_dim", c.code_embed_dim);
  c.output_embed_dim = j.value("output_embed_dim", c.output_embed_dim);
  c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
  c.dropout = j.value("dropout", c.dropout);
  c.beam_size = j.value("beam_size", c.beam_size);
  c.max_decode_steps = j.value("max_decode_steps", c.max_decode_steps);
  c.k = j.value("k", c.k);
  c.share_nl_encoder = j.value("share_nl_encoder", c.share_nl_encoder);
  c.strict_selective_read = j.value("strict_selective_read", c.strict_selective_read);
  c.validate();
  return c;
}

int NlVocab::id_or_unk(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? kUnk : it->second;
}

NlVocab NlVocab::build(const std::vector<std::string>& texts) {
  std::unordered_map<std::string, std::size_t> freq;
  for (const std::string& text : texts) {
    for (const std::string& tok : corpus::tokenize_nl(text)) ++freq[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> order(freq.begin(), freq.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  NlVocab vocab;
  vocab.tokens.push_back("<unk>");
  for (auto& [tok, n] : order) {
    if (tok == "<unk>") continue;
    vocab.tokens.push_back(tok);
  }
  for (int i = 0; i < vocab.size(); ++i) vocab.index[vocab.tokens[static_cast<std::size_t>(i)]] = i;
  return vocab;
}

const std::string& func_token() {
  static const std::string t = "<func>";
  return t;
}

std::vector<std::string> mask_signature(const std::vector<std::string>& signature_tokens,
                                        const corpus::Vocabulary& vocab) {
  std::size_t paren = signature_tokens.size();
  for (std::size_t i = 0; i < signature_tokens.size(); ++i) {
    if (signature_tokens[i] == "(") {
      paren = i;
      break;
    }
  }
  std::vector<std::string> masked = signature_tokens;
  for (std::size_t i = 0; i < paren; ++i) {
    if (!vocab.contains(masked[i])) masked[i] = func_token();
  }
  return masked;
}

ModelParams::ModelParams(const ModelConfig& config, const corpus::Vocabulary& vocab,
                         const NlVocab& nl_vocab, nn::Rng& init_rng,
                         const std::unordered_map<std::string, std::vector<double>>* pretrained_nl)
    : config_(config), vocab_(vocab), nl_vocab_(nl_vocab) {
  config_.validate();
  const auto h = static_cast<std::size_t>(config_.encoder_hidden);
  const std::size_t s = 2 * h;
  const auto e_nl = static_cast<std::size_t>(config_.nl_embed_dim);
  const auto e_code = static_cast<std::size_t>(config_.code_embed_dim);
  const auto e_out = static_cast<std::size_t>(config_.output_embed_dim);
  const auto n_vocab = static_cast<std::size_t>(vocab_.size());
  const auto n_nl = static_cast<std::size_t>(nl_vocab_.size());

  nl_embed = &store_.create("nl_embed", {n_nl, e_nl});
  nn::init_uniform(nl_embed->value, init_rng, -0.1, 0.1);
  if (pretrained_nl) {
    for (std::size_t i = 0; i < n_nl; ++i) {
      auto it = pretrained_nl->find(nl_vocab_.tokens[i]);
      if (it == pretrained_nl->end()) continue;
      if (it->second.size() != e_nl) {
        throw std::invalid_argument("pretrained embedding width " +
                                    std::to_string(it->second.size()) + " != nl_embed_dim " +
                                    std::to_string(e_nl));
      }
      for (std::size_t d = 0; d < e_nl; ++d) nl_embed->value.at(i, d) = it->second[d];
    }
  }

  code_embed = &store_.create("code_embed", {n_vocab + 1, e_code});  // +1: FUNC row
  nn::init_uniform(code_embed->value, init_rng, -0.1, 0.1);
  out_embed = &store_.create("out_embed", {n_vocab, e_out});
  nn::init_uniform(out_embed->value, init_rng, -0.1, 0.1);

  enc_nl = nn::make_bilstm(store_, "enc_nl", e_nl, h, init_rng);
  enc_desc = config_.share_nl_encoder ? enc_nl
                                      : nn::make_bilstm(store_, "enc_desc", e_nl, h, init_rng);
  enc_sg = nn::make_bilstm(store_, "enc_sg", e_code, h, init_rng);

  att_doc_w = &store_.create("att_doc.w", {s, s});
  nn::init_xavier_uniform(att_doc_w->value, init_rng);
  att_dec_w = &store_.create("att_dec.w", {s, s});
  nn::init_xavier_uniform(att_dec_w->value, init_rng);
  copy_w = &store_.create("copy.w", {s, s});
  nn::init_xavier_uniform(copy_w->value, init_rng);
  copy_b = &store_.create("copy.b", {s});
  gen_w = &store_.create("gen.w", {n_vocab, s});
  nn::init_xavier_uniform(gen_w->value, init_rng);
  gen_b = &store_.create("gen.b", {n_vocab});
  dec_in_w = &store_.create("dec_in.w", {e_out, e_out + 2 * s});
  nn::init_xavier_uniform(dec_in_w->value, init_rng);
  dec_in_b = &store_.create("dec_in.b", {e_out});
  dec = nn::make_lstm(store_, "dec", e_out, s, init_rng);

  gen_pos_.assign(n_vocab, -1);
  for (int id = 0; id < vocab_.size(); ++id) {
    if (id == corpus::Vocabulary::kPad || id == corpus::Vocabulary::kBos) continue;
    gen_pos_[static_cast<std::size_t>(id)] = static_cast<int>(gen_ids_.size());
    gen_ids_.push_back(id);
  }
}

int ModelParams::code_embed_id(const std::string& masked_token) const {
  if (masked_token == func_token()) return static_cast<int>(func_row());
  return vocab_.id_or_unk(masked_token);
}

int ModelParams::gen_position(int vocab_id) const {
  if (vocab_id < 0 || vocab_id >= vocab_.size()) return -1;
  return gen_pos_[static_cast<std::size_t>(vocab_id)];
}

int CopyCandidateIndex::find(const std::string& symbol) const {
  auto it = symbol_id.find(symbol);
  return it == symbol_id.end() ? -1 : it->second;
}

CopyCandidateIndex build_copy_index(const std::vector<std::string>& intent_tokens,
                                    const std::vector<std::vector<std::string>>& signatures) {
  static const std::vector<std::string> specials = {
      corpus::Vocabulary::pad_token(), corpus::Vocabulary::unk_token(),
      corpus::Vocabulary::bos_token(), corpus::Vocabulary::eos_token(), func_token()};

  CopyCandidateIndex index;
  auto add_slot = [&](const std::string& symbol) {
    index.slot_symbols.push_back(symbol);
    if (std::find(specials.begin(), specials.end(), symbol) != specials.end()) {
      // Special surfaces are never copy candidates; the slot stays unmapped.
      return;
    }
    auto [it, inserted] = index.symbol_id.try_emplace(
        symbol, static_cast<int>(index.symbols.size()));
    if (inserted) {
      index.symbols.push_back(symbol);
      index.slots_of_symbol.emplace_back();
    }
    index.slots_of_symbol[static_cast<std::size_t>(it->second)].push_back(
        static_cast<int>(index.slot_symbols.size() - 1));
  };

  for (const std::string& tok : intent_tokens) add_slot(tok);
  for (const auto& sig : signatures) {
    for (const std::string& tok : sig) add_slot(tok);
  }
  return index;
}

double StepDistribution::total() const {
  double t = 0.0;
  for (const Outcome& o : outcomes) t += o.p;
  return t;
}

int StepDistribution::argmax() const {
  int best = -1;
  double best_p = -1.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].p > best_p) {
      best_p = outcomes[i].p;
      best = static_cast<int>(i);
    }
  }
  return best;
}

const StepDistribution::Outcome* StepDistribution::find(const std::string& surface) const {
  for (const Outcome& o : outcomes) {
    if (o.surface == surface) return &o;
  }
  return nullptr;
}

SequenceContext::SequenceContext(ModelParams& params,
                                 const std::vector<std::string>& intent_tokens,
                                 std::span<const docstore::ApiEntry> entries, bool training,
                                 nn::Rng* dropout_rng)
    : params_(params), training_(training), dropout_rng_(dropout_rng),
      intent_tokens_(intent_tokens) {
  if (intent_tokens_.empty()) {
    throw std::invalid_argument("SequenceContext: empty intent token sequence");
  }
  init_z_ = encode_intent();

  std::vector<std::vector<std::string>> signatures;
  for (const docstore::ApiEntry& entry : entries) encode_entry(entry, signatures);

  index_ = build_copy_index(intent_tokens_, signatures);
  if (index_.n_slots() != reps_.size()) {
    throw std::logic_error("copy index slots out of sync with representations");
  }

  nn::Graph::Ref wc = graph_.param(*params_.copy_w);
  nn::Graph::Ref bc = graph_.param(*params_.copy_b);
  copy_keys_.reserve(reps_.size());
  for (nn::Graph::Ref rep : reps_) {
    copy_keys_.push_back(graph_.tanh(graph_.affine(wc, rep, bc)));
  }
}

nn::Graph::Ref SequenceContext::embed_nl(const std::string& token) {
  nn::Graph::Ref e = graph_.row(*params_.nl_embed,
                                static_cast<std::size_t>(params_.nl_vocab().id_or_unk(token)));
  return graph_.dropout(e, params_.config().dropout, dropout_rng_, training_);
}

nn::Graph::Ref SequenceContext::embed_code(const std::string& masked_token) {
  nn::Graph::Ref e = graph_.row(*params_.code_embed,
                                static_cast<std::size_t>(params_.code_embed_id(masked_token)));
  return graph_.dropout(e, params_.config().dropout, dropout_rng_, training_);
}

nn::Graph::Ref SequenceContext::encode_intent() {
  std::vector<nn::Graph::Ref> embs;
  embs.reserve(intent_tokens_.size());
  for (const std::string& tok : intent_tokens_) embs.push_back(embed_nl(tok));
  nn::BiLstmOut enc = nn::bilstm_encode(graph_, params_.enc_nl, embs);
  reps_ = enc.outputs;
  init_cell_ = enc.final_cell;
  return enc.final_hidden;
}

void SequenceContext::encode_entry(const docstore::ApiEntry& entry,
                                   std::vector<std::vector<std::string>>& signatures) {
  std::vector<std::string> sig_tokens = corpus::tokenize_snippet(entry.signature);
  std::vector<std::string> desc_tokens = corpus::tokenize_nl(entry.description);
  if (sig_tokens.empty() || desc_tokens.empty()) {
    ++skipped_entries_;
    return;
  }

  std::vector<std::string> masked = mask_signature(sig_tokens, params_.vocab());
  std::vector<nn::Graph::Ref> sig_embs;
  sig_embs.reserve(masked.size());
  for (const std::string& tok : masked) sig_embs.push_back(embed_code(tok));
  nn::BiLstmOut sig_enc = nn::bilstm_encode(graph_, params_.enc_sg, sig_embs);

  std::vector<nn::Graph::Ref> desc_embs;
  desc_embs.reserve(desc_tokens.size());
  for (const std::string& tok : desc_tokens) desc_embs.push_back(embed_nl(tok));
  nn::BiLstmOut desc_enc = nn::bilstm_encode(graph_, params_.enc_desc, desc_embs);

  // Align each signature position to the description: softmax over bilinear
  // scores, then a weighted sum of description states.
  nn::Graph::Ref w_doc = graph_.param(*params_.att_doc_w);
  std::vector<nn::Graph::Ref> projected;
  projected.reserve(desc_enc.outputs.size());
  for (nn::Graph::Ref d : desc_enc.outputs) projected.push_back(graph_.matvec(w_doc, d));

  for (nn::Graph::Ref s : sig_enc.outputs) {
    std::vector<nn::Graph::Ref> alphas;
    alphas.reserve(projected.size());
    for (nn::Graph::Ref p : projected) alphas.push_back(graph_.dot(s, p));
    nn::Graph::Ref scores = graph_.pack(alphas);
    reps_.push_back(graph_.attention_mix(scores, desc_enc.outputs));
  }
  signatures.push_back(std::move(sig_tokens));
}

SequenceContext::Step SequenceContext::initial_step() {
  Step step;
  step.z = init_z_;
  step.cell = init_cell_;
  step.copy_read.reserve(copy_keys_.size());
  for (nn::Graph::Ref key : copy_keys_) step.copy_read.push_back(graph_.dot(key, init_z_));
  return step;
}

SequenceContext::Step SequenceContext::advance(const Step& prev, const std::string& emitted,
                                               StepDebug* debug) {
  const std::size_t width = params_.state_width();

  // Attentive read over every representation in H.
  nn::Graph::Ref attentive;
  {
    nn::Graph::Ref wz = graph_.matvec(graph_.param(*params_.att_dec_w), prev.z);
    std::vector<nn::Graph::Ref> betas;
    betas.reserve(reps_.size());
    for (nn::Graph::Ref rep : reps_) betas.push_back(graph_.dot(rep, wz));
    attentive = graph_.attention_mix(graph_.pack(betas), reps_);
  }

  // Selective read over the representations of the previously emitted symbol.
  nn::Graph::Ref selective;
  int sym = index_.find(emitted);
  const std::vector<int>* slots =
      sym < 0 ? nullptr : &index_.slots_of_symbol[static_cast<std::size_t>(sym)];
  if (params_.config().strict_selective_read) {
    // Raw-sum normalization taken literally: weights f_c/K inside the symbol's
    // slots, zero outside, softmaxed over all of H.
    std::vector<nn::Graph::Ref> gammas(reps_.size(), nn::Graph::npos);
    nn::Graph::Ref zero = graph_.input(nn::Tensor::scalar(0.0));
    for (std::size_t i = 0; i < reps_.size(); ++i) gammas[i] = zero;
    if (slots && !slots->empty()) {
      std::vector<nn::Graph::Ref> selected;
      selected.reserve(slots->size());
      for (int slot : *slots) selected.push_back(prev.copy_read[static_cast<std::size_t>(slot)]);
      nn::Graph::Ref k_raw = graph_.sum(graph_.pack(selected));
      nn::Graph::Ref inv_k = graph_.reciprocal(graph_.magnitude_floor(k_raw, 1e-6));
      for (int slot : *slots) {
        gammas[static_cast<std::size_t>(slot)] =
            graph_.scale_by(prev.copy_read[static_cast<std::size_t>(slot)], inv_k);
      }
    }
    selective = graph_.attention_mix(graph_.pack(gammas), reps_);
  } else if (slots && !slots->empty()) {
    std::vector<nn::Graph::Ref> scores;
    std::vector<nn::Graph::Ref> items;
    scores.reserve(slots->size());
    items.reserve(slots->size());
    for (int slot : *slots) {
      scores.push_back(prev.copy_read[static_cast<std::size_t>(slot)]);
      items.push_back(reps_[static_cast<std::size_t>(slot)]);
    }
    selective = graph_.attention_mix(graph_.pack(scores), items);
  } else {
    selective = graph_.input(nn::Tensor({width}));
  }

  nn::Graph::Ref c_emb = graph_.row(
      *params_.out_embed, static_cast<std::size_t>(params_.vocab().id_or_unk(emitted)));
  const nn::Graph::Ref parts[] = {c_emb, attentive, selective};
  nn::Graph::Ref input = graph_.affine(graph_.param(*params_.dec_in_w), graph_.concat(parts),
                                       graph_.param(*params_.dec_in_b));
  input = graph_.dropout(input, params_.config().dropout, dropout_rng_, training_);

  nn::LstmState next = nn::lstm_step(graph_, params_.dec, input, {prev.z, prev.cell});

  Step step;
  step.z = next.hidden;
  step.cell = next.cell;
  step.consumed = emitted;
  step.copy_read.reserve(copy_keys_.size());
  for (nn::Graph::Ref key : copy_keys_) step.copy_read.push_back(graph_.dot(key, step.z));
  if (debug) {
    debug->attentive = attentive;
    debug->selective = selective;
  }
  return step;
}

SequenceContext::Scores SequenceContext::scores(const Step& step) {
  Scores s;
  s.gen = graph_.affine(graph_.param(*params_.gen_w), step.z, graph_.param(*params_.gen_b));
  if (!index_.symbols.empty()) {
    std::vector<int> segment(step.copy_read.size(), -1);
    for (std::size_t slot = 0; slot < index_.slot_symbols.size(); ++slot) {
      int sym = index_.find(index_.slot_symbols[slot]);
      segment[slot] = sym;
    }
    // Slots holding special surfaces never reach the index; map them to a
    // scratch segment so segment_sum stays total.
    bool has_unmapped = false;
    for (int& sg : segment) {
      if (sg < 0) {
        sg = static_cast<int>(index_.n_symbols());
        has_unmapped = true;
      }
    }
    nn::Graph::Ref packed = graph_.pack(step.copy_read);
    nn::Graph::Ref sums = graph_.segment_sum(packed, segment,
                                             index_.n_symbols() + (has_unmapped ? 1 : 0));
    s.copy = has_unmapped ? graph_.slice(sums, 0, index_.n_symbols()) : sums;
  }
  return s;
}

StepDistribution SequenceContext::distribution(const Step& step) {
  Scores s = scores(step);
  const nn::Tensor& gen_vals = graph_.value(s.gen);
  const nn::Tensor* copy_vals = s.copy == nn::Graph::npos ? nullptr : &graph_.value(s.copy);
  const std::vector<int>& gen_ids = params_.gen_ids();

  double max_score = -1e300;
  for (int id : gen_ids) max_score = std::max(max_score, gen_vals[static_cast<std::size_t>(id)]);
  if (copy_vals) {
    for (std::size_t i = 0; i < copy_vals->size(); ++i) {
      max_score = std::max(max_score, (*copy_vals)[i]);
    }
  }
  double z = 0.0;
  for (int id : gen_ids) z += std::exp(gen_vals[static_cast<std::size_t>(id)] - max_score);
  if (copy_vals) {
    for (std::size_t i = 0; i < copy_vals->size(); ++i) {
      z += std::exp((*copy_vals)[i] - max_score);
    }
  }

  StepDistribution dist;
  dist.outcomes.reserve(gen_ids.size() + index_.n_symbols());
  std::vector<bool> merged(index_.n_symbols(), false);
  for (int id : gen_ids) {
    StepDistribution::Outcome o;
    o.surface = params_.vocab().tokens[static_cast<std::size_t>(id)];
    o.vocab_id = id;
    o.q_g = std::exp(gen_vals[static_cast<std::size_t>(id)] - max_score) / z;
    if (copy_vals) {
      int sym = index_.find(o.surface);
      if (sym >= 0) {
        o.symbol_id = sym;
        o.q_c = std::exp((*copy_vals)[static_cast<std::size_t>(sym)] - max_score) / z;
        merged[static_cast<std::size_t>(sym)] = true;
      }
    }
    o.p = o.q_g + o.q_c;
    dist.outcomes.push_back(std::move(o));
  }
  if (copy_vals) {
    for (std::size_t sym = 0; sym < index_.n_symbols(); ++sym) {
      if (merged[sym]) continue;
      StepDistribution::Outcome o;
      o.surface = index_.symbols[sym];
      o.symbol_id = static_cast<int>(sym);
      o.q_c = std::exp((*copy_vals)[sym] - max_score) / z;
      o.p = o.q_c;
      dist.outcomes.push_back(std::move(o));
    }
  }
  return dist;
}

nn::Graph::Ref SequenceContext::step_nll(const Step& step, const std::string& gold) {
  Scores s = scores(step);
  const std::size_t n_gen = params_.gen_ids().size();

  std::vector<int> targets;
  if (params_.vocab().contains(gold)) {
    int pos = params_.gen_position(params_.vocab().index.at(gold));
    if (pos >= 0) targets.push_back(pos);
  }
  int sym = index_.find(gold);
  if (sym >= 0 && s.copy != nn::Graph::npos) {
    targets.push_back(static_cast<int>(n_gen) + sym);
  }
  if (targets.empty()) {
    targets.push_back(params_.gen_position(corpus::Vocabulary::kUnk));
  }
  return graph_.mixture_nll(s.gen, params_.gen_ids(), s.copy, std::move(targets));
}

double example_loss(ModelParams& params, const corpus::Example& example,
                    std::span<const docstore::ApiEntry> entries, const LossOptions& options) {
  if (example.snippet_tokens.empty()) {
    throw std::invalid_argument("example " + example.id + ": empty gold snippet");
  }
  SequenceContext ctx(params, corpus::tokenize_nl(example.intent), entries, options.training,
                      options.dropout_rng);

  std::vector<std::string> golds = example.snippet_tokens;
  golds.push_back(corpus::Vocabulary::eos_token());

  SequenceContext::Step step = ctx.initial_step();
  std::string prev = corpus::Vocabulary::bos_token();
  nn::Graph::Ref total = nn::Graph::npos;
  for (const std::string& gold : golds) {
    step = ctx.advance(step, prev);
    nn::Graph::Ref nll = ctx.step_nll(step, gold);
    total = total == nn::Graph::npos ? nll : ctx.graph().add(total, nll);
    prev = gold;  // teacher forcing, including the selective read
  }

  double value = ctx.graph().value(total)[0];
  if (options.backprop) {
    ctx.graph().backward(options.grad_scale == 1.0 ? total
                                                   : ctx.graph().scale(total, options.grad_scale));
  }
  return value;
}

}  // namespace docgen::model
