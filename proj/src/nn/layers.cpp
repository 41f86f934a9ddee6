#include "docgen/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace docgen::nn {

void init_uniform(Tensor& t, Rng& rng, double lo, double hi) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
}

void init_xavier_uniform(Tensor& t, Rng& rng) {
  if (t.rank() != 2) throw std::invalid_argument("xavier init expects a rank-2 tensor");
  double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
  init_uniform(t, rng, -limit, limit);
}

LstmWeights make_lstm(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                      std::size_t hidden_dim, Rng& rng) {
  LstmWeights w;
  w.hidden = hidden_dim;
  w.input = input_dim;
  w.w = &store.create(prefix + ".w", {4 * hidden_dim, input_dim});
  w.u = &store.create(prefix + ".u", {4 * hidden_dim, hidden_dim});
  w.b = &store.create(prefix + ".b", {4 * hidden_dim});
  init_xavier_uniform(w.w->value, rng);
  init_xavier_uniform(w.u->value, rng);
  for (std::size_t i = hidden_dim; i < 2 * hidden_dim; ++i) w.b->value[i] = 1.0;  // forget gate
  return w;
}

LstmState lstm_step(Graph& g, const LstmWeights& w, Graph::Ref x, const LstmState& prev) {
  const std::size_t h = w.hidden;
  if (g.value(x).size() != w.input || g.value(prev.hidden).size() != h ||
      g.value(prev.cell).size() != h) {
    throw std::invalid_argument("lstm_step: input " + g.value(x).shape_str() + ", hidden " +
                                g.value(prev.hidden).shape_str() + " incompatible with cell of " +
                                std::to_string(w.input) + "->" + std::to_string(h));
  }
  Graph::Ref pre = g.add(g.affine(g.param(*w.w), x, g.param(*w.b)),
                         g.matvec(g.param(*w.u), prev.hidden));
  Graph::Ref gate_i = g.sigmoid(g.slice(pre, 0, h));
  Graph::Ref gate_f = g.sigmoid(g.slice(pre, h, h));
  Graph::Ref cand = g.tanh(g.slice(pre, 2 * h, h));
  Graph::Ref gate_o = g.sigmoid(g.slice(pre, 3 * h, h));
  Graph::Ref cell = g.add(g.mul(gate_f, prev.cell), g.mul(gate_i, cand));
  Graph::Ref hidden = g.mul(gate_o, g.tanh(cell));
  return {hidden, cell};
}

BiLstmWeights make_bilstm(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                          std::size_t hidden_dim, Rng& rng) {
  BiLstmWeights w;
  w.fwd = make_lstm(store, prefix + ".fwd", input_dim, hidden_dim, rng);
  w.bwd = make_lstm(store, prefix + ".bwd", input_dim, hidden_dim, rng);
  return w;
}

BiLstmOut bilstm_encode(Graph& g, const BiLstmWeights& w, std::span<const Graph::Ref> inputs) {
  if (inputs.empty()) throw std::invalid_argument("bilstm_encode: empty sequence");
  const std::size_t n = inputs.size();
  const std::size_t h = w.fwd.hidden;
  Tensor zero({h});

  std::vector<Graph::Ref> fwd_h(n), bwd_h(n);
  LstmState state{g.input(zero), g.input(zero)};
  LstmState fwd_final{Graph::npos, Graph::npos};
  for (std::size_t i = 0; i < n; ++i) {
    state = lstm_step(g, w.fwd, inputs[i], state);
    fwd_h[i] = state.hidden;
    fwd_final = state;
  }
  state = LstmState{g.input(zero), g.input(zero)};
  LstmState bwd_final{Graph::npos, Graph::npos};
  for (std::size_t i = n; i-- > 0;) {
    state = lstm_step(g, w.bwd, inputs[i], state);
    bwd_h[i] = state.hidden;
    bwd_final = state;
  }

  BiLstmOut out;
  out.outputs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Graph::Ref parts[] = {fwd_h[i], bwd_h[i]};
    out.outputs[i] = g.concat(parts);
  }
  const Graph::Ref hs[] = {fwd_final.hidden, bwd_final.hidden};
  const Graph::Ref cs[] = {fwd_final.cell, bwd_final.cell};
  out.final_hidden = g.concat(hs);
  out.final_cell = g.concat(cs);
  return out;
}

Graph::Ref bilinear_score(Graph& g, Graph::Ref a, Graph::Ref w, Graph::Ref b) {
  return g.dot(a, g.matvec(w, b));
}

std::pair<Tensor, Tensor> lstm_step_values(const LstmWeights& w, const Tensor& x,
                                           const Tensor& h_prev, const Tensor& c_prev) {
  Graph g;
  LstmState prev{g.input(h_prev), g.input(c_prev)};
  LstmState next = lstm_step(g, w, g.input(x), prev);
  return {g.value(next.hidden), g.value(next.cell)};
}

double bilinear_score_values(const Tensor& a, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2 || a.size() != w.rows() || b.size() != w.cols()) {
    throw std::invalid_argument("bilinear: a " + a.shape_str() + ", W " + w.shape_str() +
                                ", b " + b.shape_str() + " are inconsistent");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) inner += w.at(i, j) * b[j];
    acc += a[i] * inner;
  }
  return acc;
}

std::pair<double, Tensor> softmax_xent_values(const Tensor& logits, std::size_t target) {
  if (target >= logits.size()) throw std::out_of_range("softmax_xent: target out of range");
  logits.check_finite("softmax_xent input");
  double m = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i) m = std::max(m, logits[i]);
  Tensor probs(logits.shape());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - m);
    z += probs[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) probs[i] /= z;
  double loss = -(logits[target] - m - std::log(z));
  return {loss, std::move(probs)};
}

}  // namespace docgen::nn
