/*
 * Copyright 2026 The AVDA Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "avda/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "avda/error.hpp"

namespace avda {

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->node(id_).value;
}

bool Var::tracked() const { return tape_ && tape_->node(id_).tracked; }

void GradSink::add(const Var& node, const Tensor& grad) {
  if (!tape_.node(node.id()).tracked) return;
  auto& slot = grads_[node.id()];
  if (!slot) {
    slot = grad;
    return;
  }
  auto dst = slot->data();
  auto src = grad.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

const Tensor& Gradients::of(const Var& leaf) const {
  auto it = grads_.find(leaf.id());
  if (it == grads_.end()) {
    throw ContractError("no gradient recorded for node " + std::to_string(leaf.id()) +
                        " (not a tracked leaf)");
  }
  return it->second;
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), true, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), false, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn backward) {
  bool tracked = false;
  for (const auto& p : parents) {
    if (&p.tape() != this) throw ContractError("operands recorded on different tapes");
    tracked = tracked || nodes_[p.id()].tracked;
  }
  nodes_.push_back(Node{std::move(value), tracked, false,
                        tracked ? std::move(backward) : BackwardFn{}});
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(const Var& loss) {
  if (consumed_) {
    throw ContractError("backward already ran on this tape; record a new forward pass");
  }
  if (&loss.tape() != this) throw ContractError("loss belongs to a different tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        shape_str(loss.shape()));
  }
  consumed_ = true;

  std::vector<std::optional<Tensor>> grads(nodes_.size());
  GradSink sink(grads, *this);
  if (nodes_[loss.id()].tracked) {
    grads[loss.id()] = Tensor(loss.shape(), 1.0);
  }
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!grads[i] || node.is_leaf || !node.backward) continue;
    node.backward(*grads[i], sink);
  }

  Gradients out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    if (!node.is_leaf || !node.tracked) continue;
    out.grads_.emplace(i, grads[i] ? std::move(*grads[i]) : Tensor(node.value.shape()));
  }
  return out;
}

namespace {

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() >= big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

// Output shape of a broadcast binary op, or ShapeError.
Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return a;
  if (b.empty() || is_suffix(b, a)) return a;
  if (a.empty() || is_suffix(a, b)) return b;
  throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(a) + " with " +
                   shape_str(b));
}

// Sums a full-size gradient down to `target` (the smaller operand's shape).
// Broadcast operands repeat with period numel(target).
Tensor reduce_to(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  Tensor out(target);
  const std::size_t n = out.size();
  auto src = g.data();
  for (std::size_t i = 0; i < src.size(); ++i) out[i % n] += src[i];
  return out;
}

template <typename Fwd, typename Dfn>
Var binary(const Var& a, const Var& b, const char* name, Fwd fwd, Dfn dfn) {
  const Shape out_shape = broadcast_shape(a.shape(), b.shape(), name);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t n = numel(out_shape);
  const std::size_t na = av.size();
  const std::size_t nb = bv.size();
  Tensor out(out_shape);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i % na], bv[i % nb]);
  const Var parents[] = {a, b};
  return a.tape().record(std::move(out), parents,
                         [a, b, dfn](const Tensor& g, GradSink& sink) {
                           const Tensor& av = a.value();
                           const Tensor& bv = b.value();
                           const std::size_t na = av.size();
                           const std::size_t nb = bv.size();
                           Tensor ga(g.shape());
                           Tensor gb(g.shape());
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             auto [da, db] = dfn(av[i % na], bv[i % nb]);
                             ga[i] = g[i] * da;
                             gb[i] = g[i] * db;
                           }
                           if (a.tracked()) sink.add(a, reduce_to(ga, av.shape()));
                           if (b.tracked()) sink.add(b, reduce_to(gb, bv.shape()));
                         });
}

// Elementwise unary op; `dfn(x, y)` is dy/dx given input x and output y.
// The local derivative is evaluated during the forward pass.
template <typename Fwd, typename Dfn>
Var unary(const Var& a, Fwd fwd, Dfn dfn) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  const Var parents[] = {a};
  if (!a.tracked()) return a.tape().record(std::move(out), parents, {});
  Tensor local(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) local[i] = dfn(av[i], out[i]);
  return a.tape().record(std::move(out), parents,
                         [a, local = std::move(local)](const Tensor& g, GradSink& sink) {
                           Tensor ga(local.shape());
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = g[i] * local[i];
                           sink.add(a, ga);
                         });
}

} // namespace

Var add(const Var& a, const Var& b) {
  return binary(a, b, "add", [](double x, double y) { return x + y; },
                [](double, double) { return std::pair{1.0, 1.0}; });
}

Var sub(const Var& a, const Var& b) {
  return binary(a, b, "sub", [](double x, double y) { return x - y; },
                [](double, double) { return std::pair{1.0, -1.0}; });
}

Var mul(const Var& a, const Var& b) {
  return binary(a, b, "mul", [](double x, double y) { return x * y; },
                [](double x, double y) { return std::pair{y, x}; });
}

Var neg(const Var& a) {
  return unary(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var exp(const Var& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
  const Tensor& v = a.value();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) {
      throw DomainError("log of non-positive entry " + std::to_string(v[i]) + " at flat index " +
                        std::to_string(i));
    }
  }
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var tanh(const Var& a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var square(const Var& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var softplus(const Var& a) {
  return unary(
      a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var scale(const Var& a, double factor) {
  return unary(a, [factor](double x) { return factor * x; },
               [factor](double, double) { return factor; });
}

Var add_scalar(const Var& a, double offset) {
  return unary(a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(av.shape()) + " and " +
                     shape_str(bv.shape()));
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = &out[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv.data().data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  const Var parents[] = {a, b};
  return a.tape().record(std::move(out), parents, [a, b, m, k, n](const Tensor& g, GradSink& sink) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (a.tracked()) {
      // dA = G * B^T
      Tensor ga(Shape{m, k});
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
          ga[i * k + p] = acc;
        }
      }
      sink.add(a, ga);
    }
    if (b.tracked()) {
      // dB = A^T * G
      Tensor gb(Shape{k, n});
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
        }
      }
      sink.add(b, gb);
    }
  });
}

Var sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  const Var parents[] = {a};
  return a.tape().record(Tensor::scalar(total), parents, [a](const Tensor& g, GradSink& sink) {
    sink.add(a, Tensor(a.shape(), g.item()));
  });
}

Var sum(const Var& a, std::size_t axis) {
  const Shape& in = a.shape();
  if (axis >= in.size()) {
    throw ShapeError("sum: axis " + std::to_string(axis) + " out of range for " + shape_str(in));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= in[i];
  for (std::size_t i = axis + 1; i < in.size(); ++i) inner *= in[i];
  const std::size_t len = in[axis];
  Shape out_shape = in;
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor out(out_shape);
  const Tensor& av = a.value();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += av[(o * len + l) * inner + i];
  const Var parents[] = {a};
  return a.tape().record(std::move(out), parents,
                         [a, outer, len, inner](const Tensor& g, GradSink& sink) {
                           Tensor ga(a.shape());
                           for (std::size_t o = 0; o < outer; ++o)
                             for (std::size_t l = 0; l < len; ++l)
                               for (std::size_t i = 0; i < inner; ++i)
                                 ga[(o * len + l) * inner + i] = g[o * inner + i];
                           sink.add(a, ga);
                         });
}

Var mean(const Var& a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var mean(const Var& a, std::size_t axis) {
  if (axis >= a.shape().size()) {
    throw ShapeError("mean: axis " + std::to_string(axis) + " out of range for " +
                     shape_str(a.shape()));
  }
  return scale(sum(a, axis), 1.0 / static_cast<double>(a.shape()[axis]));
}

Var log_softmax(const Var& logits) {
  const Tensor& x = logits.value();
  if (x.rank() == 0) throw ShapeError("log_softmax needs a class dimension");
  const std::size_t k = x.shape().back();
  if (k == 0) throw ShapeError("log_softmax over an empty class dimension");
  const std::size_t rows = x.size() / k;
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data().data() + r * k;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, in[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(in[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] = in[j] - lse;
  }
  const Var parents[] = {logits};
  if (!logits.tracked()) return logits.tape().record(std::move(out), parents, {});
  Tensor probs(out.shape());
  for (std::size_t i = 0; i < out.size(); ++i) probs[i] = std::exp(out[i]);
  return logits.tape().record(std::move(out), parents,
                              [logits, probs = std::move(probs), rows, k](const Tensor& g,
                                                                          GradSink& sink) {
                                Tensor gx(probs.shape());
                                for (std::size_t r = 0; r < rows; ++r) {
                                  double gs = 0.0;
                                  for (std::size_t j = 0; j < k; ++j) gs += g[r * k + j];
                                  for (std::size_t j = 0; j < k; ++j) {
                                    gx[r * k + j] = g[r * k + j] - probs[r * k + j] * gs;
                                  }
                                }
                                sink.add(logits, gx);
                              });
}

Var softmax(const Var& logits) { return exp(log_softmax(logits)); }

Var pick(const Var& a, std::span<const std::size_t> index) {
  const Tensor& av = a.value();
  const std::size_t rows = av.rows(), cols = av.cols();
  if (index.size() != rows) {
    throw ShapeError("pick: " + std::to_string(index.size()) + " indices for " +
                     shape_str(av.shape()));
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  Tensor out(Shape{rows});
  for (std::size_t r = 0; r < rows; ++r) {
    if (idx[r] >= cols) {
      throw IndexError("pick: index " + std::to_string(idx[r]) + " out of range in row " +
                       std::to_string(r));
    }
    out[r] = av[r * cols + idx[r]];
  }
  const Var parents[] = {a};
  return a.tape().record(std::move(out), parents,
                         [a, idx = std::move(idx), cols](const Tensor& g, GradSink& sink) {
                           Tensor ga(a.shape());
                           for (std::size_t r = 0; r < idx.size(); ++r) ga[r * cols + idx[r]] = g[r];
                           sink.add(a, ga);
                         });
}

Var take_rows(const Var& a, std::span<const std::size_t> rows) {
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  Tensor out = gather_rows(a.value(), idx);
  const std::size_t cols = a.value().cols();
  const Var parents[] = {a};
  return a.tape().record(std::move(out), parents,
                         [a, idx = std::move(idx), cols](const Tensor& g, GradSink& sink) {
                           Tensor ga(a.shape());
                           for (std::size_t r = 0; r < idx.size(); ++r)
                             for (std::size_t c = 0; c < cols; ++c)
                               ga[idx[r] * cols + c] += g[r * cols + c];
                           sink.add(a, ga);
                         });
}

Var detach(const Var& a) { return a.tape().constant(a.value()); }

} // namespace avda
