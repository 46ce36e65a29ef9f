#pragma once

// Reverse-mode differentiation over matrix-valued nodes.
//
// A Tape records every primitive application in creation order. Because a
// node can only reference nodes created before it, creation order is a
// topological order and backward() simply walks the record in reverse.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "igrec/tensor.hpp"

namespace igrec::ad {

class Tape;

// Lightweight handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Matrix value);

  // Registers a primitive result. `inputs` are used only to decide whether the
  // node needs a gradient; `backward` reads grad(self) and accumulates into
  // the inputs through accumulate().
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  void backward(Var loss);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Gradient of the last backward() target with respect to this node. Nodes
  // the target does not depend on report an all-zero matrix.
  Matrix grad(Var v) const;
  const Matrix* grad_if_any(std::size_t id) const;

  // Adds `g` into the gradient buffer of node `id` (no-op for constants).
  void accumulate(std::size_t id, const Matrix& g);
  // Mutable gradient buffer, allocated as zeros on first use.
  Matrix& grad_buffer(std::size_t id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// ---- primitives --------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double c);
Var hadamard(Var a, Var b);
Var add_row(Var a, Var row);               // a (n x m) + broadcast row (1 x m)
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);               // a * b^T
Var sigmoid(Var a);
Var log_sigmoid(Var a);
Var softmax_rows(Var logits, double tau);  // row-wise softmax(logits / tau)
Var straight_through_onehot(Var soft);     // forward: argmax one-hot; backward: identity
Var spmm(const SparseMatrix& s, const SparseMatrix& s_t, Var x);  // s * x; s_t = s^T
Var gather_rows(Var x, std::span<const std::size_t> index);
Var row_dot(Var a, Var b);                 // (n x m),(n x m) -> n x 1
Var row_cosine(Var a, Var b);              // n x 1; degenerate rows give 0 with zero grad
Var mul_col(Var x, Var c);                 // row r of x scaled by c(r, 0)
Var segment_sum(Var x, std::span<const std::size_t> offsets);      // rows grouped by offsets
Var segment_softmax(Var x, std::span<const std::size_t> offsets);  // x is n x 1
Var segment_max(Var x, std::span<const std::size_t> offsets);
Var concat_cols(std::span<const Var> parts);
Var col(Var x, std::size_t c);
Var sum(Var a);
Var mean(Var a);

// Elementwise rule shared by self-gating and friends.
double sigmoid_scalar(double x);
double log_sigmoid_scalar(double x);

}  // namespace igrec::ad
