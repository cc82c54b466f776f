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

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "avda/tensor.hpp"

namespace avda {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
class Var {
public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool tracked() const;
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Collects upstream gradients during the reverse sweep. Contributions to
/// untracked nodes are dropped; fan-out contributions are summed.
class GradSink {
public:
  void add(const Var& node, const Tensor& grad);

private:
  friend class Tape;
  explicit GradSink(std::vector<std::optional<Tensor>>& grads, const Tape& tape)
      : grads_(grads), tape_(tape) {}

  std::vector<std::optional<Tensor>>& grads_;
  const Tape& tape_;
};

/// Result of Tape::backward: one gradient per tracked leaf.
class Gradients {
public:
  /// Gradient with respect to a tracked leaf; zeros when the loss does not
  /// depend on it. Throws ContractError for nodes that are not tracked leaves.
  const Tensor& of(const Var& leaf) const;
  bool contains(const Var& leaf) const { return grads_.count(leaf.id()) > 0; }

private:
  friend class Tape;
  std::unordered_map<std::size_t, Tensor> grads_;
};

/// Define-by-run gradient tape. Operations append nodes in execution order,
/// so the node list is topologically sorted by construction. A tape supports
/// exactly one backward pass.
class Tape {
public:
  using BackwardFn = std::function<void(const Tensor& grad_out, GradSink& sink)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Tracked leaf: gradients are reported for it.
  Var leaf(Tensor value);
  /// Untracked value; never receives gradients.
  Var constant(Tensor value);

  /// Appends a computed node. The node is tracked iff any parent is tracked;
  /// `backward` is dropped for untracked nodes.
  Var record(Tensor value, std::span<const Var> parents, BackwardFn backward);

  Gradients backward(const Var& loss);

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

private:
  friend class Var;
  friend class GradSink;

  struct Node {
    Tensor value;
    bool tracked = false;
    bool is_leaf = false;
    BackwardFn backward;
  };

  const Node& node(std::size_t id) const { return nodes_[id]; }

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Elementwise binary ops broadcast only when one operand is a rank-0 scalar
// or its shape equals the trailing dimensions of the other. Anything else
// throws ShapeError.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);

Var neg(const Var& a);
Var exp(const Var& a);
/// Throws DomainError when any entry is <= 0.
Var log(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var square(const Var& a);
Var softplus(const Var& a);

Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);

Var matmul(const Var& a, const Var& b);

/// Sum of all entries (rank-0 result).
Var sum(const Var& a);
/// Sum over one axis; the axis is removed from the shape.
Var sum(const Var& a, std::size_t axis);
Var mean(const Var& a);
Var mean(const Var& a, std::size_t axis);

/// Log-probabilities along the last dimension, computed with max
/// subtraction.
Var log_softmax(const Var& logits);
Var softmax(const Var& logits);

/// out[i] = a[i, index[i]] for a rank-2 `a`.
Var pick(const Var& a, std::span<const std::size_t> index);
/// Rows of a rank-2 `a`, in the order given.
Var take_rows(const Var& a, std::span<const std::size_t> rows);

/// Same value, cut from the gradient graph.
Var detach(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator-(const Var& a) { return neg(a); }
inline Var operator*(const Var& a, double s) { return scale(a, s); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }
inline Var operator+(const Var& a, double s) { return add_scalar(a, s); }
inline Var operator-(const Var& a, double s) { return add_scalar(a, -s); }

} // namespace avda
