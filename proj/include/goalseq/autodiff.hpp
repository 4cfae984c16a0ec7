#pragma once

// Minimal reverse-mode automatic differentiation over dense Eigen matrices.
//
// A Tape records every operation in creation order; backward() walks the
// record in reverse and accumulates adjoints. Nodes that do not depend on a
// variable leaf are treated as constants and carry no backward closure.

#include "goalseq/core.hpp"

#include <functional>
#include <span>
#include <vector>

namespace goalseq::ad {

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward =
      std::function<void(Tape&, const Matrix& upstream, const Matrix& output)>;

  Var constant(Matrix value);
  Var variable(Matrix value);
  Var scalar(double value);

  /// Seeds d(loss)/d(loss) = 1; `loss` must be 1x1.
  void backward(Var loss);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Zero matrix if nothing flowed into `v`.
  Matrix grad(Var v) const;

  /// Used by op implementations.
  Var record(Matrix value, bool requires_grad, Backward backward);
  void accumulate(Var v, const Matrix& g);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

// Elementwise and linear algebra.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);               // Hadamard
Var matmul(Var a, Var b);
Var add_row(Var a, Var row);         // a (n x m) + row (1 x m) broadcast
Var mul_col(Var a, Var col);         // a (n x m) .* col (n x 1) broadcast
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var neg(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var softplus(Var a);                 // log(1 + e^a), stable
Var log_sigmoid(Var a);              // -softplus(-a)

// Reductions.
Var sum(Var a);                      // 1 x 1
Var mean(Var a);                     // 1 x 1
Var row_sum(Var a);                  // n x 1

// Structure.
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var concat_cols(std::span<const Var> parts);
Var gather_rows(Var table, std::span<const int> ids);
Var pick(Var a, std::span<const int> cols);  // out(i) = a(i, cols[i])

// Row-wise distributions.
Var log_softmax_rows(Var a);
Var softmax_rows(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace goalseq::ad
