#include "docgen/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace docgen::nn {

// ---------------------------------------------------------------------------
// ParameterStore
// ---------------------------------------------------------------------------

Parameter& ParameterStore::create(const std::string& name, std::vector<std::size_t> shape) {
  if (by_name_.count(name)) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  params_.push_back(Parameter{name, Tensor(shape), Tensor(shape), true});
  Parameter& p = params_.back();
  by_name_[name] = &p;
  return p;
}

Parameter* ParameterStore::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

Parameter& ParameterStore::get(const std::string& name) {
  Parameter* p = find(name);
  if (!p) throw std::out_of_range("no parameter named " + name);
  return *p;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  return const_cast<ParameterStore*>(this)->get(name);
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (Parameter& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const Parameter& p : params_) out.push_back(&p);
  return out;
}

std::size_t ParameterStore::total_values() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

void ParameterStore::zero_grads() {
  for (Parameter& p : params_) p.zero_grad();
}

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

Graph::Ref Graph::emplace(Tensor value, std::function<void(Graph&, const Node&)> back,
                          const char* op_name) {
  value.check_finite(op_name);
  nodes_.push_back(Node{std::move(value), Tensor(), std::move(back)});
  return static_cast<Ref>(nodes_.size() - 1);
}

Tensor& Graph::grad_of(Ref r) {
  Node& n = nodes_[r];
  if (n.grad.empty() && n.value.size() > 0) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Tensor Graph::node_grad(Ref r) const {
  const Node& n = nodes_[r];
  if (n.grad.empty()) return Tensor(n.value.shape());
  return n.grad;
}

Graph::Ref Graph::input(Tensor value) {
  return emplace(std::move(value), nullptr, "input");
}

Graph::Ref Graph::param(Parameter& p) {
  auto it = param_cache_.find(&p);
  if (it != param_cache_.end()) return it->second;
  Parameter* pp = &p;
  Ref r = emplace(p.value, [pp](Graph&, const Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) pp->grad[i] += self.grad[i];
  }, "param");
  param_cache_[&p] = r;
  return r;
}

Graph::Ref Graph::row(Parameter& table, std::size_t r) {
  if (table.value.rank() != 2 || r >= table.value.rows()) {
    throw std::invalid_argument("row(" + std::to_string(r) + ") out of range for parameter " +
                                table.name + " of shape " + table.value.shape_str());
  }
  std::size_t w = table.value.cols();
  Tensor v({w});
  for (std::size_t j = 0; j < w; ++j) v[j] = table.value.at(r, j);
  Parameter* pp = &table;
  return emplace(std::move(v), [pp, r, w](Graph&, const Node& self) {
    for (std::size_t j = 0; j < w; ++j) pp->grad[r * w + j] += self.grad[j];
  }, "row");
}

Graph::Ref Graph::add(Ref a, Ref b) {
  const Tensor& va = nodes_[a].value;
  const Tensor& vb = nodes_[b].value;
  if (!va.same_shape(vb)) {
    throw std::invalid_argument("add: shape mismatch " + va.shape_str() + " vs " + vb.shape_str());
  }
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  return emplace(std::move(out), [a, b](Graph& g, const Node& self) {
    Tensor& ga = g.grad_of(a);
    Tensor& gb = g.grad_of(b);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      ga[i] += self.grad[i];
      gb[i] += self.grad[i];
    }
  }, "add");
}

Graph::Ref Graph::mul(Ref a, Ref b) {
  const Tensor& va = nodes_[a].value;
  const Tensor& vb = nodes_[b].value;
  if (!va.same_shape(vb)) {
    throw std::invalid_argument("mul: shape mismatch " + va.shape_str() + " vs " + vb.shape_str());
  }
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  return emplace(std::move(out), [a, b](Graph& g, const Node& self) {
    const Tensor& va = g.nodes_[a].value;
    const Tensor& vb = g.nodes_[b].value;
    Tensor& ga = g.grad_of(a);
    Tensor& gb = g.grad_of(b);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      ga[i] += self.grad[i] * vb[i];
      gb[i] += self.grad[i] * va[i];
    }
  }, "mul");
}

Graph::Ref Graph::scale(Ref a, double c) {
  Tensor out = nodes_[a].value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
  return emplace(std::move(out), [a, c](Graph& g, const Node& self) {
    Tensor& ga = g.grad_of(a);
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += c * self.grad[i];
  }, "scale");
}

Graph::Ref Graph::matvec(Ref w, Ref x) {
  const Tensor& vw = nodes_[w].value;
  const Tensor& vx = nodes_[x].value;
  if (vw.rank() != 2 || vx.rank() != 1 || vw.cols() != vx.size()) {
    throw std::invalid_argument("matvec: shape mismatch " + vw.shape_str() + " vs " +
                                vx.shape_str());
  }
  std::size_t m = vw.rows(), n = vw.cols();
  Tensor out({m});
  const double* W = vw.data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* wrow = W + i * n;
    for (std::size_t j = 0; j < n; ++j) acc += wrow[j] * vx[j];
    out[i] = acc;
  }
  return emplace(std::move(out), [w, x, m, n](Graph& g, const Node& self) {
    const Tensor& vw = g.nodes_[w].value;
    const Tensor& vx = g.nodes_[x].value;
    Tensor& gw = g.grad_of(w);
    Tensor& gx = g.grad_of(x);
    for (std::size_t i = 0; i < m; ++i) {
      double gi = self.grad[i];
      if (gi == 0.0) continue;
      const double* wrow = vw.data() + i * n;
      double* gwrow = gw.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        gwrow[j] += gi * vx[j];
        gx[j] += gi * wrow[j];
      }
    }
  }, "matvec");
}

Graph::Ref Graph::affine(Ref w, Ref x, Ref b) { return add(matvec(w, x), b); }

Graph::Ref Graph::sigmoid(Ref x) {
  const Tensor& vx = nodes_[x].value;
  Tensor out(vx.shape());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    double v = vx[i];
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return emplace(std::move(out), [x](Graph& g, const Node& self) {
    Tensor& gx = g.grad_of(x);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      double s = self.value[i];
      gx[i] += self.grad[i] * s * (1.0 - s);
    }
  }, "sigmoid");
}

Graph::Ref Graph::tanh(Ref x) {
  const Tensor& vx = nodes_[x].value;
  Tensor out(vx.shape());
  for (std::size_t i = 0; i < vx.size(); ++i) out[i] = std::tanh(vx[i]);
  return emplace(std::move(out), [x](Graph& g, const Node& self) {
    Tensor& gx = g.grad_of(x);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      double t = self.value[i];
      gx[i] += self.grad[i] * (1.0 - t * t);
    }
  }, "tanh");
}

Graph::Ref Graph::slice(Ref x, std::size_t start, std::size_t len) {
  const Tensor& vx = nodes_[x].value;
  if (vx.rank() != 1 || start + len > vx.size()) {
    throw std::invalid_argument("slice: [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") out of range for " +
                                vx.shape_str());
  }
  Tensor out({len});
  for (std::size_t i = 0; i < len; ++i) out[i] = vx[start + i];
  return emplace(std::move(out), [x, start, len](Graph& g, const Node& self) {
    Tensor& gx = g.grad_of(x);
    for (std::size_t i = 0; i < len; ++i) gx[start + i] += self.grad[i];
  }, "slice");
}

Graph::Ref Graph::concat(std::span<const Ref> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  std::size_t total = 0;
  for (Ref p : parts) total += nodes_[p].value.size();
  Tensor out({total});
  std::size_t pos = 0;
  for (Ref p : parts) {
    const Tensor& v = nodes_[p].value;
    for (std::size_t i = 0; i < v.size(); ++i) out[pos + i] = v[i];
    pos += v.size();
  }
  std::vector<Ref> held(parts.begin(), parts.end());
  return emplace(std::move(out), [held](Graph& g, const Node& self) {
    std::size_t pos = 0;
    for (Ref p : held) {
      Tensor& gp = g.grad_of(p);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += self.grad[pos + i];
      pos += gp.size();
    }
  }, "concat");
}

Graph::Ref Graph::dot(Ref a, Ref b) {
  const Tensor& va = nodes_[a].value;
  const Tensor& vb = nodes_[b].value;
  if (!va.same_shape(vb)) {
    throw std::invalid_argument("dot: shape mismatch " + va.shape_str() + " vs " + vb.shape_str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) acc += va[i] * vb[i];
  return emplace(Tensor::scalar(acc), [a, b](Graph& g, const Node& self) {
    const Tensor& va = g.nodes_[a].value;
    const Tensor& vb = g.nodes_[b].value;
    Tensor& ga = g.grad_of(a);
    Tensor& gb = g.grad_of(b);
    double gd = self.grad[0];
    for (std::size_t i = 0; i < va.size(); ++i) {
      ga[i] += gd * vb[i];
      gb[i] += gd * va[i];
    }
  }, "dot");
}

Graph::Ref Graph::pack(std::span<const Ref> scalars) {
  if (scalars.empty()) throw std::invalid_argument("pack: no inputs");
  Tensor out({scalars.size()});
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    const Tensor& v = nodes_[scalars[i]].value;
    if (v.size() != 1) throw std::invalid_argument("pack: input " + std::to_string(i) + " not scalar");
    out[i] = v[0];
  }
  std::vector<Ref> held(scalars.begin(), scalars.end());
  return emplace(std::move(out), [held](Graph& g, const Node& self) {
    for (std::size_t i = 0; i < held.size(); ++i) g.grad_of(held[i])[0] += self.grad[i];
  }, "pack");
}

Graph::Ref Graph::sum(Ref x) {
  const Tensor& vx = nodes_[x].value;
  double acc = 0.0;
  for (std::size_t i = 0; i < vx.size(); ++i) acc += vx[i];
  return emplace(Tensor::scalar(acc), [x](Graph& g, const Node& self) {
    Tensor& gx = g.grad_of(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[0];
  }, "sum");
}

Graph::Ref Graph::softmax(Ref x) {
  const Tensor& vx = nodes_[x].value;
  if (vx.size() == 0) throw std::invalid_argument("softmax: empty input");
  Tensor out(vx.shape());
  double m = vx[0];
  for (std::size_t i = 1; i < vx.size(); ++i) m = std::max(m, vx[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < vx.size(); ++i) {
    out[i] = std::exp(vx[i] - m);
    z += out[i];
  }
  for (std::size_t i = 0; i < vx.size(); ++i) out[i] /= z;
  return emplace(std::move(out), [x](Graph& g, const Node& self) {
    Tensor& gx = g.grad_of(x);
    double inner = 0.0;
    for (std::size_t i = 0; i < self.grad.size(); ++i) inner += self.grad[i] * self.value[i];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      gx[i] += self.value[i] * (self.grad[i] - inner);
    }
  }, "softmax");
}

Graph::Ref Graph::attention_mix(Ref scores, std::span<const Ref> items) {
  const Tensor& vs = nodes_[scores].value;
  if (vs.size() != items.size() || items.empty()) {
    throw std::invalid_argument("attention_mix: " + std::to_string(vs.size()) + " scores vs " +
                                std::to_string(items.size()) + " items");
  }
  std::size_t width = nodes_[items[0]].value.size();
  std::vector<double> w(vs.size());
  double m = vs[0];
  for (std::size_t i = 1; i < vs.size(); ++i) m = std::max(m, vs[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    w[i] = std::exp(vs[i] - m);
    z += w[i];
  }
  for (double& wi : w) wi /= z;

  Tensor out({width});
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Tensor& v = nodes_[items[i]].value;
    if (v.size() != width) throw std::invalid_argument("attention_mix: item width mismatch");
    for (std::size_t j = 0; j < width; ++j) out[j] += w[i] * v[j];
  }
  std::vector<Ref> held(items.begin(), items.end());
  return emplace(std::move(out), [scores, held, w](Graph& g, const Node& self) {
    std::size_t k = held.size();
    std::vector<double> dw(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const Tensor& vi = g.nodes_[held[i]].value;
      Tensor& gi = g.grad_of(held[i]);
      double acc = 0.0;
      for (std::size_t j = 0; j < self.grad.size(); ++j) {
        gi[j] += w[i] * self.grad[j];
        acc += vi[j] * self.grad[j];
      }
      dw[i] = acc;
    }
    double inner = 0.0;
    for (std::size_t i = 0; i < k; ++i) inner += w[i] * dw[i];
    Tensor& gs = g.grad_of(scores);
    for (std::size_t i = 0; i < k; ++i) gs[i] += w[i] * (dw[i] - inner);
  }, "attention_mix");
}

Graph::Ref Graph::segment_sum(Ref x, std::vector<int> segment, std::size_t n_segments) {
  const Tensor& vx = nodes_[x].value;
  if (vx.size() != segment.size()) {
    throw std::invalid_argument("segment_sum: segment map size mismatch");
  }
  Tensor out({n_segments});
  for (std::size_t i = 0; i < segment.size(); ++i) {
    int s = segment[i];
    if (s < 0 || static_cast<std::size_t>(s) >= n_segments) {
      throw std::invalid_argument("segment_sum: segment id out of range");
    }
    out[static_cast<std::size_t>(s)] += vx[i];
  }
  return emplace(std::move(out), [x, segment](Graph& g, const Node& self) {
    Tensor& gx = g.grad_of(x);
    for (std::size_t i = 0; i < segment.size(); ++i) {
      gx[i] += self.grad[static_cast<std::size_t>(segment[i])];
    }
  }, "segment_sum");
}

Graph::Ref Graph::dropout(Ref x, double rate, Rng* rng, bool training) {
  if (!training || rate <= 0.0) return x;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
  if (!rng) throw std::invalid_argument("dropout: training mode needs an rng");
  const Tensor& vx = nodes_[x].value;
  double keep = 1.0 - rate;
  std::vector<double> mask(vx.size());
  Tensor out(vx.shape());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    mask[i] = rng->uniform() < rate ? 0.0 : 1.0 / keep;
    out[i] = vx[i] * mask[i];
  }
  return emplace(std::move(out), [x, mask](Graph& g, const Node& self) {
    Tensor& gx = g.grad_of(x);
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i] * mask[i];
  }, "dropout");
}

Graph::Ref Graph::magnitude_floor(Ref s, double eps) {
  const Tensor& vs = nodes_[s].value;
  if (vs.size() != 1) throw std::invalid_argument("magnitude_floor: input must be scalar");
  double v = vs[0];
  bool clamped = std::fabs(v) < eps;
  double out = clamped ? (v < 0.0 ? -eps : eps) : v;
  return emplace(Tensor::scalar(out), [s, clamped](Graph& g, const Node& self) {
    if (!clamped) g.grad_of(s)[0] += self.grad[0];
  }, "magnitude_floor");
}

Graph::Ref Graph::reciprocal(Ref s) {
  const Tensor& vs = nodes_[s].value;
  if (vs.size() != 1) throw std::invalid_argument("reciprocal: input must be scalar");
  if (vs[0] == 0.0) throw std::invalid_argument("reciprocal: division by zero");
  double out = 1.0 / vs[0];
  return emplace(Tensor::scalar(out), [s, out](Graph& g, const Node& self) {
    g.grad_of(s)[0] += -out * out * self.grad[0];
  }, "reciprocal");
}

Graph::Ref Graph::scale_by(Ref x, Ref s) {
  const Tensor& vx = nodes_[x].value;
  const Tensor& vs = nodes_[s].value;
  if (vs.size() != 1) throw std::invalid_argument("scale_by: scale must be scalar");
  Tensor out = vx;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vs[0];
  return emplace(std::move(out), [x, s](Graph& g, const Node& self) {
    const Tensor& vx = g.nodes_[x].value;
    const Tensor& vs = g.nodes_[s].value;
    Tensor& gx = g.grad_of(x);
    Tensor& gs = g.grad_of(s);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      gx[i] += self.grad[i] * vs[0];
      gs[0] += self.grad[i] * vx[i];
    }
  }, "scale_by");
}

Graph::Ref Graph::mixture_nll(Ref gen, std::vector<int> gen_keep, Ref copy,
                              std::vector<int> target_positions) {
  const Tensor& vg = nodes_[gen].value;
  std::size_t n_gen = gen_keep.size();
  std::size_t n_copy = copy == npos ? 0 : nodes_[copy].value.size();
  std::size_t n = n_gen + n_copy;
  if (n == 0) throw std::invalid_argument("mixture_nll: empty score list");
  if (target_positions.empty()) throw std::invalid_argument("mixture_nll: no target positions");

  std::vector<double> s(n);
  for (std::size_t i = 0; i < n_gen; ++i) {
    int id = gen_keep[i];
    if (id < 0 || static_cast<std::size_t>(id) >= vg.size()) {
      throw std::invalid_argument("mixture_nll: gen index out of range");
    }
    s[i] = vg[static_cast<std::size_t>(id)];
  }
  for (std::size_t i = 0; i < n_copy; ++i) s[n_gen + i] = nodes_[copy].value[i];

  double m = s[0];
  for (double v : s) m = std::max(m, v);
  double z = 0.0;
  for (double v : s) z += std::exp(v - m);
  double lse_all = m + std::log(z);

  double mt = s[static_cast<std::size_t>(target_positions[0])];
  for (int t : target_positions) {
    if (t < 0 || static_cast<std::size_t>(t) >= n) {
      throw std::invalid_argument("mixture_nll: target position out of range");
    }
    mt = std::max(mt, s[static_cast<std::size_t>(t)]);
  }
  double zt = 0.0;
  for (int t : target_positions) zt += std::exp(s[static_cast<std::size_t>(t)] - mt);
  double lse_target = mt + std::log(zt);

  double loss = lse_all - lse_target;

  std::vector<double> delta(n);  // p - q
  for (std::size_t i = 0; i < n; ++i) delta[i] = std::exp(s[i] - lse_all);
  for (int t : target_positions) {
    delta[static_cast<std::size_t>(t)] -= std::exp(s[static_cast<std::size_t>(t)] - lse_target);
  }

  return emplace(Tensor::scalar(loss),
                 [gen, gen_keep, copy, n_gen, delta](Graph& g, const Node& self) {
    double gl = self.grad[0];
    Tensor& gg = g.grad_of(gen);
    for (std::size_t i = 0; i < n_gen; ++i) {
      gg[static_cast<std::size_t>(gen_keep[i])] += gl * delta[i];
    }
    if (copy != npos) {
      Tensor& gc = g.grad_of(copy);
      for (std::size_t i = 0; i < gc.size(); ++i) gc[i] += gl * delta[n_gen + i];
    }
  }, "mixture_nll");
}

Graph::Ref Graph::softmax_xent(Ref logits, std::size_t target) {
  const Tensor& v = nodes_[logits].value;
  if (target >= v.size()) throw std::out_of_range("softmax_xent: target out of range");
  std::vector<int> keep(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) keep[i] = static_cast<int>(i);
  return mixture_nll(logits, std::move(keep), npos, {static_cast<int>(target)});
}

void Graph::backward(Ref loss) {
  if (nodes_[loss].value.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                nodes_[loss].value.shape_str());
  }
  grad_of(loss)[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.grad.empty() && n.back) n.back(*this, n);
  }
}

}  // namespace docgen::nn
