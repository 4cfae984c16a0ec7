#pragma once

// Autoregressive LSTM generator with two output heads.
//
// Discrete mode: the first input is the start token; step i emits
// softmax(W_o h_{i-1} + b_o) over the vocabulary. The pad token doubles as the
// end marker: the first emitted pad is scored, later positions are forced to
// pad and masked out of every likelihood.
//
// Real mode: x_1 comes from a latent decoder p(x_1 | z) with z ~ N(0, I);
// steps i >= 2 are Gaussian N(W_o h_{i-1} + b_o, sigma^2 I) given the LSTM
// state after consuming x_1..x_{i-1}. A small encoder q(z | x_1) gives the
// posterior used by the lower bound.

#include "goalseq/autodiff.hpp"
#include "goalseq/core.hpp"
#include "goalseq/nn.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace goalseq {

enum class Mode { discrete, real };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct GeneratorShape {
  Mode mode = Mode::discrete;
  int vocab_size = 0;    // discrete
  int feature_dim = 0;   // real
  int embed_dim = 32;    // discrete input embedding
  int hidden = 64;
  int layers = 1;
  int latent_dim = 10;     // real
  int latent_hidden = 12;  // real encoder/decoder width
  int pad_id = 0;
  int start_id = 1;

  int output_dim() const { return mode == Mode::discrete ? vocab_size : feature_dim; }
  void validate() const;
  std::map<std::string, std::string> to_meta() const;
  static GeneratorShape from_meta(const std::map<std::string, std::string>& meta);
  bool operator==(const GeneratorShape&) const = default;
};

struct GeneratorParams {
  GeneratorShape shape;
  ParamSet tensors;
};

GeneratorParams init_generator(const GeneratorShape& shape, std::uint64_t seed);

/// Per-layer LSTM state, one row per batch element.
struct HiddenState {
  std::vector<Matrix> h;
  std::vector<Matrix> c;

  static HiddenState zeros(const GeneratorShape& shape, Eigen::Index batch);
};

struct LatentPosterior {
  Vector mu;
  Vector sigma;
};

struct TeacherForcedResult {
  /// One entry per position. Masked positions hold 0; in real mode entry 0
  /// (x_1, produced by the latent decoder) is also 0.
  std::vector<double> log_likelihoods;
  HiddenState final_state;
};

TeacherForcedResult forward_teacher_forced(const GeneratorParams& gen, const TokenSequence& seq);
TeacherForcedResult forward_teacher_forced(const GeneratorParams& gen, const RealSequence& seq,
                                           double sigma_train);

struct GumbelSample {
  Vector soft;  // on the simplex
  Vector hard;  // one-hot
  int index = 0;
};

GumbelSample gumbel_softmax_sample(const Vector& logits, double tau, Rng& rng);
/// Same, with caller-supplied Gumbel noise.
GumbelSample gumbel_softmax_sample(const Vector& logits, const Vector& gumbel_noise, double tau);

struct SampledSequence {
  TokenSequence tokens;            // discrete mode
  RealSequence values;             // real mode
  std::vector<double> log_probs;   // log p_G of each emitted symbol; 0 where masked
  std::vector<Vector> soft;        // discrete: relaxed rows fed to the discriminator
  Vector z;                        // real: latent draw
};

/// Single-sequence sampler. Real mode ignores `tau`; with sigma_sample = 0 the
/// path is the deterministic mean given z, and log_probs are reported under
/// N(mean, sigma_train^2).
SampledSequence sample_sequence(const GeneratorParams& gen, double tau, double sigma_sample,
                                Rng& rng, int steps, double sigma_train = 1.0);
/// Real mode with a fixed latent draw.
SampledSequence sample_sequence_from(const GeneratorParams& gen, const Vector& z,
                                     double sigma_sample, Rng& rng, int steps,
                                     double sigma_train = 1.0);

LatentPosterior encode_latent(const GeneratorParams& gen, const Vector& x1);
/// Sum_j 0.5 (mu_j^2 + sigma_j^2 - 1 - ln sigma_j^2).
double kl_to_prior(const LatentPosterior& post);
/// Mean of p(x_1 | z).
Vector decode_first(const GeneratorParams& gen, const Vector& z);

/// Gaussian log-density of `x` under N(mean, sigma^2 I).
double gaussian_log_density(const Vector& x, const Vector& mean, double sigma);

// ---------------------------------------------------------------------------
// Tape-level building blocks used by the training objectives. All of them are
// batched: one row per sequence.

namespace gen {

/// Which positions carry a likelihood term: real tokens plus the terminal pad.
Matrix discrete_mask(std::span<const TokenSequence> batch);

/// B x T per-step log-likelihoods under teacher forcing, masked.
ad::Var discrete_log_likelihoods(const BoundParams& p, const GeneratorShape& shape,
                                 std::span<const TokenSequence> batch);

/// B x T Gaussian transition log-likelihoods for x_2..x_T; column 0 is 0.
ad::Var real_transition_log_likelihoods(const BoundParams& p, const GeneratorShape& shape,
                                        std::span<const RealSequence> batch, double sigma);

struct LatentVars {
  ad::Var mu;         // B x d_z
  ad::Var log_sigma;  // B x d_z
};
LatentVars encode_latent(const BoundParams& p, ad::Var x1);
ad::Var decode_first(const BoundParams& p, ad::Var z);
/// B x 1 KL(q || N(0, I)).
ad::Var kl_to_prior(const LatentVars& q);
/// B x 1 Gaussian log-density rows of `x` (constant or not) under N(mean, sigma^2 I).
ad::Var gaussian_log_density(ad::Var x, ad::Var mean, double sigma);

struct RelaxedSample {
  std::vector<std::vector<int>> tokens;  // B rows of T ids
  std::vector<ad::Var> soft;             // T entries of B x V
  ad::Var log_probs;                     // B x T, masked
  Matrix mask;                           // B x T
};

/// Discrete sampling on the tape. The hard token is argmax(logits + g), the
/// soft row softmax((logits + g) / tau). Log-probabilities use the untempered
/// softmax, i.e. the actual sampling distribution of the hard token.
RelaxedSample sample_relaxed(const BoundParams& p, const GeneratorShape& shape, int batch,
                             int steps, double tau, Rng& rng);

struct RealSample {
  std::vector<ad::Var> steps;  // T entries of B x F
  ad::Var log_probs;           // B x T under N(mean, sigma_density^2)
  std::vector<RealSequence> values;
};

/// Real-mode sampling on the tape. With `detach_actions` each emitted row is
/// fed back as a constant, which is what the score-function gradient needs;
/// otherwise the rows stay differentiable (reparameterized) for the GAN loss.
RealSample sample_real(const BoundParams& p, const GeneratorShape& shape, int batch, int steps,
                       double sigma_noise, double sigma_density, bool detach_actions, Rng& rng);

}  // namespace gen

// ---------------------------------------------------------------------------
// Tape-free inference used by the sampling and rollout kernels.

namespace infer {

Matrix embed(const GeneratorParams& gen, std::span<const int> ids);
/// Advances every layer by one step; returns the output-head row block (logits or means).
Matrix step(const GeneratorParams& gen, HiddenState& state, const Matrix& input);

}  // namespace infer

}  // namespace goalseq
