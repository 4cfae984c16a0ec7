#pragma once

#include "goalseq/autodiff.hpp"
#include "goalseq/core.hpp"
#include "goalseq/nn.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace goalseq {

/// Projection (input -> embed) -> one LSTM layer -> last hidden state -> linear -> sigmoid.
struct DiscriminatorShape {
  int input_dim = 0;  // vocabulary size (soft one-hot rows) or feature count
  int embed_dim = 32;
  int hidden = 32;

  void validate() const;
  std::map<std::string, std::string> to_meta() const;
  static DiscriminatorShape from_meta(const std::map<std::string, std::string>& meta);
  bool operator==(const DiscriminatorShape&) const = default;
};

struct DiscriminatorParams {
  DiscriminatorShape shape;
  ParamSet tensors;
};

DiscriminatorParams init_discriminator(const DiscriminatorShape& shape, std::uint64_t seed);

/// Probability that `x` (T x input_dim) is real; always in (0, 1) for finite input.
double score(const DiscriminatorParams& d, const Matrix& x);
/// Pre-sigmoid output.
double score_logit(const DiscriminatorParams& d, const Matrix& x);

/// Elementwise score. Parallel over sequences; output order matches input order.
std::vector<double> batch_score(const DiscriminatorParams& d, std::span<const Matrix> xs);
/// Serial reference for batch_score.
std::vector<double> batch_score_serial(const DiscriminatorParams& d, std::span<const Matrix> xs);

/// One-hot rows for a token sequence (T x V).
Matrix one_hot_rows(const TokenSequence& seq, int vocab_size);

namespace disc {

/// B x 1 logits for a batch given as T per-step blocks of B x input_dim.
ad::Var logits(const BoundParams& p, const DiscriminatorShape& shape, std::span<const ad::Var> steps);

/// Per-step blocks for constant inputs (one T x input_dim matrix per sequence).
std::vector<ad::Var> constant_steps(ad::Tape& tape, std::span<const Matrix> xs);

}  // namespace disc

}  // namespace goalseq
