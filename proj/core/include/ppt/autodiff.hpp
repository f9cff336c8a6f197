#pragma once

#include <functional>
#include <vector>

#include "ppt/tensor.hpp"

namespace ppt {

class Tape;

/// Lightweight handle to a node on a tape. Copyable, only valid while the
/// owning tape is alive.
class Var {
public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Tensor& grad() const;
  bool requires_grad() const;
  const std::vector<int>& shape() const { return value().shape(); }

private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Dynamic tape: ops record themselves on forward, backward replays the
/// recorded list in reverse. One tape per loss evaluation; tapes and their
/// tensors are confined to a single thread.
class Tape {
public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Introduces a leaf holding `value`. Gradients accumulate into leaves
  /// with requires_grad set.
  Var input(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return input(std::move(value), false); }

  /// Reverse sweep from a scalar root. Every requires_grad node ends up
  /// with a gradient buffer (zero for nodes the root does not reach).
  /// Calling backward a second time without reset() is an error.
  void backward(Var root);

  /// Clears gradients and the backward flag so the tape can run backward
  /// again from a (possibly different) scalar root.
  void reset();

  const Tensor& value(Var v) const { return nodes_[static_cast<size_t>(v.id())].value; }
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[static_cast<size_t>(v.id())].requires_grad; }
  size_t node_count() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

  // Internal surface used by the op implementations.
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool touched = false;  // received gradient during the current backward
    std::function<void(Tape&)> backward_fn;
  };
  Var emplace(Tensor value, bool requires_grad, std::function<void(Tape&)> backward_fn);
  Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  /// Accumulates `delta` (same shape as node value) into a node's gradient.
  void accumulate(int id, const Tensor& delta);
  /// Gradient buffer of a node, allocating a zero buffer on first use.
  Tensor& grad_buffer(int id);
  void mark_touched(int id) { nodes_[static_cast<size_t>(id)].touched = true; }

private:
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// ---- elementwise ---------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }

Var relu(Var x);
Var exp(Var x);   // input clamped at 700 so the result stays finite
Var log(Var x);   // x must be strictly positive
Var sqrt(Var x);  // x must be non-negative

Var scale(Var x, double c);
Var add_scalar(Var x, double c);
inline Var neg(Var x) { return scale(x, -1.0); }

// ---- shape / structure ----------------------------------------------------

Var matmul(Var a, Var b);
Var transpose(Var x);
Var reshape(Var x, std::vector<int> shape);

enum class ReduceOp { sum, mean, var, max };

/// Reduction over one axis, keeping the axis with size 1. `var` is the
/// biased (divide by N) population variance. `max` routes its gradient to
/// the first maximal element of each slice.
Var reduce(ReduceOp op, Var x, int axis);

Var sum_all(Var x);   // scalar [1]
Var mean_all(Var x);  // scalar [1]

/// Row-wise log softmax over the last axis of a rank-2 tensor,
/// max-stabilized.
Var log_softmax(Var x);
inline Var softmax(Var x) { return exp(log_softmax(x)); }

/// Replaces positions where mask is nonzero with `value`; gradient is zero
/// through the replaced positions. Mask shape must equal or broadcast to x.
Var masked_fill(Var x, const Tensor& mask, double value);

// ---- verification oracle ---------------------------------------------------

/// Central-difference gradient check of a scalar-valued function. Returns
/// the max over coordinates of |fd - ad| / max(1, |fd|, |ad|). `f` must be
/// a pure function of its input.
double check_gradients(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double h = 1e-5);

}  // namespace ppt
