#pragma once

#include "goalseq/autodiff.hpp"
#include "goalseq/core.hpp"

#include <string>
#include <vector>

namespace goalseq {

struct NamedTensor {
  std::string name;
  Matrix value;
};

/// Ordered collection of named parameter tensors. Order is insertion order
/// and is what checkpoints and gradient vectors follow.
class ParamSet {
 public:
  void add(std::string name, Matrix value);
  std::size_t size() const { return tensors_.size(); }
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const;

  Matrix& operator[](std::size_t i) { return tensors_[i].value; }
  const Matrix& operator[](std::size_t i) const { return tensors_[i].value; }
  Matrix& at(const std::string& name) { return tensors_[index_of(name)].value; }
  const Matrix& at(const std::string& name) const { return tensors_[index_of(name)].value; }
  const std::string& name(std::size_t i) const { return tensors_[i].name; }
  const std::vector<NamedTensor>& tensors() const { return tensors_; }

  std::size_t scalar_count() const;
  bool all_finite() const;
  bool operator==(const ParamSet& other) const;

 private:
  std::vector<NamedTensor> tensors_;
};

/// Gradients aligned with a ParamSet.
using GradSet = std::vector<Matrix>;

GradSet zeros_like(const ParamSet& params);
double global_norm(const GradSet& grads);
/// Rescales in place so the global norm is at most `max_norm`; returns the pre-clip norm.
double clip_global_norm(GradSet& grads, double max_norm);

/// ParamSet leaves on a tape, indexed like the ParamSet.
class BoundParams {
 public:
  BoundParams(ad::Tape& tape, const ParamSet& params, bool trainable);
  ad::Var operator[](std::size_t i) const { return vars_[i]; }
  ad::Var at(const std::string& name) const { return vars_[params_->index_of(name)]; }
  GradSet grads() const;
  ad::Tape& tape() const { return *tape_; }

 private:
  ad::Tape* tape_;
  const ParamSet* params_;
  std::vector<ad::Var> vars_;
};

/// Uniform(-scale, scale) matrix.
Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng);

/// Gate layout: columns [input | forget | cell | output], each `hidden` wide.
/// Weight has (input_dim + hidden) rows acting on [x, h].
struct LstmLayerNames {
  std::string weight;
  std::string bias;
};
LstmLayerNames lstm_names(const std::string& prefix);
void add_lstm_layer(ParamSet& params, const std::string& prefix, int input_dim, int hidden,
                    Rng& rng);

struct LstmStateVars {
  ad::Var h;
  ad::Var c;
};

LstmStateVars lstm_step(ad::Var x, const LstmStateVars& state, ad::Var weight, ad::Var bias);

struct LstmState {
  Matrix h;  // batch x hidden
  Matrix c;
};

/// Same recurrence as lstm_step without recording a tape.
LstmState lstm_step(const Matrix& x, const LstmState& state, const Matrix& weight,
                    const Matrix& bias);

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Row-wise numerically stable log-softmax.
Matrix log_softmax_rows(const Matrix& logits);

}  // namespace goalseq
