#include "goalseq/objectives.hpp"

#include <cmath>
#include <numbers>

namespace goalseq {

FiniteDistribution::FiniteDistribution(Vector probs) : probs_(std::move(probs)) {
  if (probs_.size() == 0) throw ValidationError("FiniteDistribution: empty support");
  if ((probs_.array() < 0.0).any() || !probs_.allFinite()) {
    throw ValidationError("FiniteDistribution: entries must be finite and >= 0");
  }
  if (std::abs(probs_.sum() - 1.0) > 1e-12) {
    throw ValidationError("FiniteDistribution: entries must sum to 1");
  }
}

namespace {

void require_aligned(const FiniteDistribution& p, const FiniteDistribution& q) {
  if (p.size() != q.size()) throw ValidationError("distributions have different supports");
}

}  // namespace

Vector optimal_discriminator(const FiniteDistribution& p_d, const FiniteDistribution& p_g) {
  require_aligned(p_d, p_g);
  Vector d(p_d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double denom = p_d[i] + p_g[i];
    d(i) = denom > 0.0 ? p_d[i] / denom : 0.5;
  }
  return d;
}

double inner_discriminator_objective(double p_d, double p_g, double d) {
  double v = 0.0;
  if (p_d > 0.0) v -= p_d * std::log(d);
  if (p_g > 0.0) v -= p_g * std::log1p(-d);
  return v;
}

double plugged_objective(const FiniteDistribution& p_d, const FiniteDistribution& p_g) {
  require_aligned(p_d, p_g);
  const Vector d = optimal_discriminator(p_d, p_g);
  double v = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (p_d[i] > 0.0) {
      if (p_g[i] == 0.0) {
        throw ValidationError("plugged_objective: log p_g undefined where p_d > 0");
      }
      v += p_d[i] * std::log(p_g[i]);
    }
    v += inner_discriminator_objective(p_d[i], p_g[i], d(i));
  }
  return v;
}

double kl(const FiniteDistribution& p, const FiniteDistribution& q) {
  require_aligned(p, q);
  double v = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw ValidationError("kl: q vanishes where p does not");
    v += p[i] * std::log(p[i] / q[i]);
  }
  return v;
}

double js(const FiniteDistribution& p, const FiniteDistribution& q) {
  require_aligned(p, q);
  double v = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) v += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) v += 0.5 * q[i] * std::log(q[i] / m);
  }
  return v;
}

double entropy(const FiniteDistribution& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

double identity_residual(const FiniteDistribution& p_d, const FiniteDistribution& p_g) {
  const double lhs = plugged_objective(p_d, p_g);
  const double rhs = -kl(p_d, p_g) - 2.0 * js(p_d, p_g) + std::log(4.0) - entropy(p_d);
  return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------

ad::Var sequence_lower_bound(const BoundParams& p, const GeneratorShape& shape,
                             std::span<const TokenSequence> batch) {
  if (shape.mode != Mode::discrete) {
    throw ValidationError("sequence_lower_bound: token batch given to a real-mode generator");
  }
  return ad::row_sum(gen::discrete_log_likelihoods(p, shape, batch));
}

ad::Var sequence_lower_bound(const BoundParams& p, const GeneratorShape& shape,
                             std::span<const RealSequence> batch, double sigma_train, Rng& rng) {
  if (shape.mode != Mode::real) {
    throw ValidationError("sequence_lower_bound: real batch given to a discrete-mode generator");
  }
  ad::Tape& tape = p.tape();
  ad::Var transitions = ad::row_sum(gen::real_transition_log_likelihoods(p, shape, batch, sigma_train));

  const auto rows = static_cast<Eigen::Index>(batch.size());
  Matrix first(rows, shape.feature_dim);
  for (Eigen::Index b = 0; b < rows; ++b) first.row(b) = batch[static_cast<std::size_t>(b)].values.row(0);
  ad::Var x1 = tape.constant(first);

  gen::LatentVars q = gen::encode_latent(p, x1);
  Matrix eps(rows, shape.latent_dim);
  for (Eigen::Index b = 0; b < rows; ++b) {
    for (Eigen::Index j = 0; j < eps.cols(); ++j) eps(b, j) = rng.normal();
  }
  ad::Var z = ad::add(q.mu, ad::mul(ad::exp(q.log_sigma), tape.constant(eps)));
  ad::Var recon = gen::gaussian_log_density(x1, gen::decode_first(p, z), sigma_train);
  return ad::add(ad::sub(transitions, gen::kl_to_prior(q)), recon);
}

ad::Var discriminator_loss(ad::Var real_logits, ad::Var fake_logits, double real_label) {
  ad::Var real_term = ad::log_sigmoid(real_logits);
  if (real_label < 1.0) {
    real_term = ad::add(ad::scale(real_term, real_label),
                        ad::scale(ad::log_sigmoid(ad::neg(real_logits)), 1.0 - real_label));
  }
  ad::Var fake_term = ad::log_sigmoid(ad::neg(fake_logits));  // log(1 - D)
  return ad::neg(ad::add(ad::mean(real_term), ad::mean(fake_term)));
}

ad::Var generator_gan_loss(ad::Var fake_logits) { return ad::neg(ad::mean(ad::log_sigmoid(fake_logits))); }

GeneratorLoss total_generator_loss(ad::Var ml, ad::Var gan, ad::Var rl, double lambda_gan,
                                   double alpha_rl) {
  GeneratorLoss out;
  out.breakdown.ml_term = ml.scalar();
  ad::Var total = ml;
  if (gan.valid()) {
    out.breakdown.gan_term = gan.scalar();
    total = ad::add(total, ad::scale(gan, lambda_gan));
  }
  if (rl.valid()) {
    out.breakdown.rl_term = rl.scalar();
    total = ad::add(total, ad::scale(rl, alpha_rl));
  }
  out.total = total;
  out.breakdown.total = total.scalar();
  return out;
}

double sequence_lower_bound(const GeneratorParams& g, const TokenSequence& seq) {
  ad::Tape tape;
  BoundParams p(tape, g.tensors, false);
  const TokenSequence batch[] = {seq};
  return sequence_lower_bound(p, g.shape, batch).scalar();
}

double sequence_lower_bound(const GeneratorParams& g, const RealSequence& seq, double sigma_train,
                            Rng& rng) {
  ad::Tape tape;
  BoundParams p(tape, g.tensors, false);
  const RealSequence batch[] = {seq};
  return sequence_lower_bound(p, g.shape, batch, sigma_train, rng).scalar();
}

double discriminator_loss(const DiscriminatorParams& d, std::span<const Matrix> real,
                          std::span<const Matrix> fake) {
  if (real.empty() || fake.empty()) throw ValidationError("discriminator_loss: empty batch");
  auto log_sig = [](double x) { return -(std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x)))); };
  double r = 0.0, f = 0.0;
  for (const auto& x : real) r += log_sig(score_logit(d, x));
  for (const auto& x : fake) f += log_sig(-score_logit(d, x));
  return -(r / static_cast<double>(real.size())) - (f / static_cast<double>(fake.size()));
}

double generator_gan_loss(const DiscriminatorParams& d, std::span<const Matrix> fake) {
  if (fake.empty()) throw ValidationError("generator_gan_loss: empty batch");
  double f = 0.0;
  for (const auto& x : fake) {
    const double l = score_logit(d, x);
    f += -(std::max(-l, 0.0) + std::log1p(std::exp(-std::abs(l))));
  }
  return -f / static_cast<double>(fake.size());
}

}  // namespace goalseq
