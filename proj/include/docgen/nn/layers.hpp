#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "docgen/nn/graph.hpp"

namespace docgen::nn {

// Parameter initializers.
void init_uniform(Tensor& t, Rng& rng, double lo, double hi);
void init_xavier_uniform(Tensor& t, Rng& rng);  // rank-2: limit sqrt(6/(fan_in+fan_out))

// Single LSTM cell with the four gates packed as [input, forget, candidate,
// output] rows of one weight matrix. Forget-gate bias starts at 1.
struct LstmWeights {
  Parameter* w = nullptr;  // (4h, in)
  Parameter* u = nullptr;  // (4h, h)
  Parameter* b = nullptr;  // (4h)
  std::size_t hidden = 0;
  std::size_t input = 0;
};

LstmWeights make_lstm(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                      std::size_t hidden_dim, Rng& rng);

struct LstmState {
  Graph::Ref hidden;
  Graph::Ref cell;
};

LstmState lstm_step(Graph& g, const LstmWeights& w, Graph::Ref x, const LstmState& prev);

struct BiLstmWeights {
  LstmWeights fwd;
  LstmWeights bwd;
  std::size_t output_dim() const { return 2 * fwd.hidden; }
};

BiLstmWeights make_bilstm(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                          std::size_t hidden_dim, Rng& rng);

struct BiLstmOut {
  std::vector<Graph::Ref> outputs;  // per position, concat(fwd_i, bwd_i)
  Graph::Ref final_hidden;          // concat(fwd final, bwd final)
  Graph::Ref final_cell;            // concat(fwd final cell, bwd final cell)
};

// Throws on an empty input sequence.
BiLstmOut bilstm_encode(Graph& g, const BiLstmWeights& w, std::span<const Graph::Ref> inputs);

// a^T W b as a scalar node.
Graph::Ref bilinear_score(Graph& g, Graph::Ref a, Graph::Ref w, Graph::Ref b);

// Plain-tensor conveniences (single-use graphs behind the scenes) for callers
// that do not need gradients.
std::pair<Tensor, Tensor> lstm_step_values(const LstmWeights& w, const Tensor& x,
                                           const Tensor& h_prev, const Tensor& c_prev);
double bilinear_score_values(const Tensor& a, const Tensor& w, const Tensor& b);

// Numerically stable softmax cross-entropy; returns (loss, probabilities).
std::pair<double, Tensor> softmax_xent_values(const Tensor& logits, std::size_t target);

}  // namespace docgen::nn
