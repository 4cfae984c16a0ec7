#include "goalseq/nn.hpp"

#include <cmath>

namespace goalseq {

void ParamSet::add(std::string name, Matrix value) {
  if (contains(name)) throw ValidationError("duplicate parameter name: " + name);
  tensors_.push_back({std::move(name), std::move(value)});
}

std::size_t ParamSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  throw ValidationError("unknown parameter: " + name);
}

bool ParamSet::contains(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return true;
  }
  return false;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
  return n;
}

bool ParamSet::all_finite() const {
  for (const auto& t : tensors_) {
    if (!t.value.allFinite()) return false;
  }
  return true;
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const auto& a = tensors_[i];
    const auto& b = other.tensors_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols() ||
        a.value != b.value) {
      return false;
    }
  }
  return true;
}

GradSet zeros_like(const ParamSet& params) {
  GradSet out;
  out.reserve(params.size());
  for (const auto& t : params.tensors()) out.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
  return out;
}

double global_norm(const GradSet& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

double clip_global_norm(GradSet& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads) g *= s;
  }
  return norm;
}

BoundParams::BoundParams(ad::Tape& tape, const ParamSet& params, bool trainable)
    : tape_(&tape), params_(&params) {
  vars_.reserve(params.size());
  for (const auto& t : params.tensors()) {
    vars_.push_back(trainable ? tape.variable(t.value) : tape.constant(t.value));
  }
}

GradSet BoundParams::grads() const {
  GradSet out;
  out.reserve(vars_.size());
  for (const auto& v : vars_) out.push_back(tape_->grad(v));
  return out;
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = (2.0 * rng.uniform() - 1.0) * scale;
  }
  return m;
}

LstmLayerNames lstm_names(const std::string& prefix) { return {prefix + ".W", prefix + ".b"}; }

void add_lstm_layer(ParamSet& params, const std::string& prefix, int input_dim, int hidden,
                    Rng& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  const auto names = lstm_names(prefix);
  params.add(names.weight, uniform_matrix(input_dim + hidden, 4 * hidden, scale, rng));
  Matrix bias = Matrix::Zero(1, 4 * hidden);
  bias.middleCols(hidden, hidden).setOnes();  // forget gate starts open
  params.add(names.bias, std::move(bias));
}

LstmStateVars lstm_step(ad::Var x, const LstmStateVars& state, ad::Var weight, ad::Var bias) {
  const Eigen::Index hidden = state.h.cols();
  const ad::Var parts[] = {x, state.h};
  ad::Var gates = ad::add_row(ad::matmul(ad::concat_cols(parts), weight), bias);
  ad::Var i = ad::sigmoid(ad::slice_cols(gates, 0, hidden));
  ad::Var f = ad::sigmoid(ad::slice_cols(gates, hidden, hidden));
  ad::Var g = ad::tanh(ad::slice_cols(gates, 2 * hidden, hidden));
  ad::Var o = ad::sigmoid(ad::slice_cols(gates, 3 * hidden, hidden));
  ad::Var c = ad::add(ad::mul(f, state.c), ad::mul(i, g));
  ad::Var h = ad::mul(o, ad::tanh(c));
  return {h, c};
}

LstmState lstm_step(const Matrix& x, const LstmState& state, const Matrix& weight,
                    const Matrix& bias) {
  const Eigen::Index hidden = state.h.cols();
  const Eigen::Index in = x.cols();
  Matrix gates = x * weight.topRows(in) + state.h * weight.bottomRows(hidden);
  gates.rowwise() += bias.row(0);
  auto sig = [](double v) { return sigmoid(v); };
  Matrix i = gates.middleCols(0, hidden).unaryExpr(sig);
  Matrix f = gates.middleCols(hidden, hidden).unaryExpr(sig);
  Matrix g = gates.middleCols(2 * hidden, hidden).array().tanh().matrix();
  Matrix o = gates.middleCols(3 * hidden, hidden).unaryExpr(sig);
  LstmState next;
  next.c = f.cwiseProduct(state.c) + i.cwiseProduct(g);
  next.h = o.cwiseProduct(next.c.array().tanh().matrix());
  return next;
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

}  // namespace goalseq
