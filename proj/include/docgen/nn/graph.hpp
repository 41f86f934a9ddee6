#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "docgen/nn/rng.hpp"
#include "docgen/nn/tensor.hpp"

namespace docgen::nn {

// A named trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  void zero_grad() { grad.fill(0.0); }
};

// Owns parameters with stable addresses; iteration follows creation order,
// which fixes serialization and optimizer update order.
class ParameterStore {
 public:
  Parameter& create(const std::string& name, std::vector<std::size_t> shape);
  Parameter* find(const std::string& name);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t count() const { return params_.size(); }
  std::size_t total_values() const;
  void zero_grads();

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

// Reverse-mode tape. Every op appends a node holding its forward value and a
// closure that scatters the node's gradient to its inputs. Nodes only refer
// to earlier nodes, so walking the tape backwards is a topological order.
class Graph {
 public:
  using Ref = std::uint32_t;
  static constexpr Ref npos = static_cast<Ref>(-1);

  // Leaves.
  Ref input(Tensor value);                       // constant, no gradient
  Ref param(Parameter& p);                       // cached: one node per parameter
  Ref row(Parameter& table, std::size_t r);      // one row of a rank-2 parameter

  // Elementwise / linear algebra.
  Ref add(Ref a, Ref b);
  Ref mul(Ref a, Ref b);
  Ref scale(Ref a, double c);
  Ref matvec(Ref w, Ref x);                      // rank-2 * rank-1
  Ref affine(Ref w, Ref x, Ref b);               // w * x + b
  Ref sigmoid(Ref x);
  Ref tanh(Ref x);
  Ref slice(Ref x, std::size_t start, std::size_t len);
  Ref concat(std::span<const Ref> parts);
  Ref dot(Ref a, Ref b);                         // scalar
  Ref pack(std::span<const Ref> scalars);        // scalars -> vector
  Ref sum(Ref x);                                // reduce to scalar
  Ref softmax(Ref x);

  // softmax(scores) . items, where items are vectors of equal width.
  Ref attention_mix(Ref scores, std::span<const Ref> items);

  // out[s] = sum of x[i] with segment[i] == s.
  Ref segment_sum(Ref x, std::vector<int> segment, std::size_t n_segments);

  // Inverted dropout: identity in eval mode, mask/(1-rate) in training mode.
  Ref dropout(Ref x, double rate, Rng* rng, bool training);

  // Scalar helpers for normalizations that divide by a computed value.
  Ref magnitude_floor(Ref s, double eps);  // clamps |s| up to eps, keeping sign
  Ref reciprocal(Ref s);                   // 1/s, s scalar and nonzero
  Ref scale_by(Ref x, Ref s);              // x * s, s scalar

  // Joint generation/copy negative log-likelihood over the virtual score list
  //   S = gen[gen_keep[0..]], copy[0..]          (copy may be npos)
  // loss = logsumexp(S) - logsumexp(S[target_positions]).
  // target_positions index into S. Numerically stable via max subtraction.
  Ref mixture_nll(Ref gen, std::vector<int> gen_keep, Ref copy,
                  std::vector<int> target_positions);

  // Stable softmax cross-entropy over a score vector; loss = -ln p[target].
  Ref softmax_xent(Ref logits, std::size_t target);

  const Tensor& value(Ref r) const { return nodes_[r].value; }
  std::size_t node_count() const { return nodes_.size(); }

  // Seeds d(loss)=1 and accumulates into Parameter::grad for every parameter
  // leaf reached. `loss` must be scalar.
  void backward(Ref loss);

  // Gradient at a node (valid after backward; zero tensor if untouched).
  Tensor node_grad(Ref r) const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // lazily allocated
    std::function<void(Graph&, const Node&)> back;
  };

  Ref emplace(Tensor value, std::function<void(Graph&, const Node&)> back,
              const char* op_name);
  Tensor& grad_of(Ref r);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, Ref> param_cache_;
};

}  // namespace docgen::nn
