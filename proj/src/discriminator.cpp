#include "goalseq/discriminator.hpp"

#include <algorithm>
#include <cmath>

namespace goalseq {

void DiscriminatorShape::validate() const {
  if (input_dim < 1 || embed_dim < 1 || hidden < 1) {
    throw ValidationError("discriminator: dimensions must be >= 1");
  }
}

std::map<std::string, std::string> DiscriminatorShape::to_meta() const {
  return {{"disc.input_dim", std::to_string(input_dim)},
          {"disc.embed_dim", std::to_string(embed_dim)},
          {"disc.hidden", std::to_string(hidden)}};
}

DiscriminatorShape DiscriminatorShape::from_meta(const std::map<std::string, std::string>& meta) {
  auto geti = [&](const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw ValidationError("checkpoint meta missing " + key);
    return std::stoi(it->second);
  };
  DiscriminatorShape s{geti("disc.input_dim"), geti("disc.embed_dim"), geti("disc.hidden")};
  s.validate();
  return s;
}

DiscriminatorParams init_discriminator(const DiscriminatorShape& shape, std::uint64_t seed) {
  shape.validate();
  Rng rng(seed);
  DiscriminatorParams d{shape, {}};
  d.tensors.add("proj.W", uniform_matrix(shape.input_dim, shape.embed_dim,
                                         1.0 / std::sqrt(static_cast<double>(shape.input_dim)), rng));
  d.tensors.add("proj.b", Matrix::Zero(1, shape.embed_dim));
  add_lstm_layer(d.tensors, "lstm", shape.embed_dim, shape.hidden, rng);
  d.tensors.add("head.W", uniform_matrix(shape.hidden, 1,
                                         1.0 / std::sqrt(static_cast<double>(shape.hidden)), rng));
  d.tensors.add("head.b", Matrix::Zero(1, 1));
  return d;
}

double score_logit(const DiscriminatorParams& d, const Matrix& x) {
  if (x.cols() != d.shape.input_dim || x.rows() < 1) {
    throw ValidationError("discriminator: input must be T x " + std::to_string(d.shape.input_dim));
  }
  const Matrix& pw = d.tensors.at("proj.W");
  const Matrix& pb = d.tensors.at("proj.b");
  const Matrix& w = d.tensors.at("lstm.W");
  const Matrix& b = d.tensors.at("lstm.b");
  LstmState state{Matrix::Zero(1, d.shape.hidden), Matrix::Zero(1, d.shape.hidden)};
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    Matrix e = x.row(t) * pw + pb;
    state = lstm_step(e, state, w, b);
  }
  return (state.h * d.tensors.at("head.W"))(0, 0) + d.tensors.at("head.b")(0, 0);
}

double score(const DiscriminatorParams& d, const Matrix& x) {
  // Clamp away from the endpoints so the score stays strictly inside (0, 1).
  const double p = sigmoid(score_logit(d, x));
  return std::clamp(p, 1e-300, std::nextafter(1.0, 0.0));
}

std::vector<double> batch_score_serial(const DiscriminatorParams& d, std::span<const Matrix> xs) {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = score(d, xs[i]);
  return out;
}

std::vector<double> batch_score(const DiscriminatorParams& d, std::span<const Matrix> xs) {
  d.shape.validate();
  std::vector<double> out(xs.size());
  const auto n = static_cast<long>(xs.size());
  bool failed = false;
#pragma omp parallel for schedule(static) reduction(|| : failed)
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = score(d, xs[static_cast<std::size_t>(i)]);
    } catch (...) {
      failed = true;
    }
  }
  if (failed) return batch_score_serial(d, xs);  // rethrows with the real message
  return out;
}

Matrix one_hot_rows(const TokenSequence& seq, int vocab_size) {
  Matrix m = Matrix::Zero(seq.length(), vocab_size);
  for (int t = 0; t < seq.length(); ++t) {
    const int id = seq.ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= vocab_size) throw ValidationError("one_hot_rows: id out of range");
    m(t, id) = 1.0;
  }
  return m;
}

namespace disc {

ad::Var logits(const BoundParams& p, const DiscriminatorShape& shape, std::span<const ad::Var> steps) {
  if (steps.empty()) throw ValidationError("discriminator: empty sequence");
  ad::Tape& tape = p.tape();
  const Eigen::Index rows = steps[0].rows();
  LstmStateVars state{tape.constant(Matrix::Zero(rows, shape.hidden)),
                      tape.constant(Matrix::Zero(rows, shape.hidden))};
  for (const ad::Var& x : steps) {
    if (x.cols() != shape.input_dim || x.rows() != rows) {
      throw ValidationError("discriminator: step block shape mismatch");
    }
    ad::Var e = ad::add_row(ad::matmul(x, p.at("proj.W")), p.at("proj.b"));
    state = lstm_step(e, state, p.at("lstm.W"), p.at("lstm.b"));
  }
  return ad::add_row(ad::matmul(state.h, p.at("head.W")), p.at("head.b"));
}

std::vector<ad::Var> constant_steps(ad::Tape& tape, std::span<const Matrix> xs) {
  if (xs.empty()) throw ValidationError("discriminator: empty batch");
  const Eigen::Index steps = xs[0].rows();
  const Eigen::Index cols = xs[0].cols();
  std::vector<ad::Var> out;
  for (Eigen::Index t = 0; t < steps; ++t) {
    Matrix block(static_cast<Eigen::Index>(xs.size()), cols);
    for (std::size_t b = 0; b < xs.size(); ++b) {
      if (xs[b].rows() != steps || xs[b].cols() != cols) {
        throw ValidationError("discriminator: ragged batch");
      }
      block.row(static_cast<Eigen::Index>(b)) = xs[b].row(t);
    }
    out.push_back(tape.constant(std::move(block)));
  }
  return out;
}

}  // namespace disc

}  // namespace goalseq
