#pragma once

#include "goalseq/autodiff.hpp"
#include "goalseq/discriminator.hpp"
#include "goalseq/generator.hpp"

#include <span>

namespace goalseq {

// ---------------------------------------------------------------------------
// Finite-support analysis of the combined likelihood + adversarial objective.
// All logs are natural; 0 log 0 = 0 and no flooring is applied here.

class FiniteDistribution {
 public:
  /// Entries must be >= 0 and sum to 1 within 1e-12.
  explicit FiniteDistribution(Vector probs);
  const Vector& probs() const { return probs_; }
  Eigen::Index size() const { return probs_.size(); }
  double operator[](Eigen::Index i) const { return probs_(i); }

 private:
  Vector probs_;
};

/// p_d / (p_d + p_g) per support point; 0.5 where both vanish.
Vector optimal_discriminator(const FiniteDistribution& p_d, const FiniteDistribution& p_g);

/// -p_d log D - p_g log(1 - D) at a single support point.
double inner_discriminator_objective(double p_d, double p_g, double d);

/// sum p_d log p_g - sum p_d log D* - sum p_g log(1 - D*).
/// Throws ValidationError if p_g vanishes where p_d does not.
double plugged_objective(const FiniteDistribution& p_d, const FiniteDistribution& p_g);

double kl(const FiniteDistribution& p, const FiniteDistribution& q);
double js(const FiniteDistribution& p, const FiniteDistribution& q);
double entropy(const FiniteDistribution& p);

/// |plugged - (-KL - 2 JS + ln 4 - H(p_d))|.
double identity_residual(const FiniteDistribution& p_d, const FiniteDistribution& p_g);

// ---------------------------------------------------------------------------
// Trainable losses (tape level). Every loss is a quantity to minimize.

/// B x 1 log-likelihood rows; discrete mode is the plain autoregressive sum.
ad::Var sequence_lower_bound(const BoundParams& p, const GeneratorShape& shape,
                             std::span<const TokenSequence> batch);
/// B x 1 lower bound: transitions - KL(q || p) + log p(x_1 | z), one reparameterized draw.
ad::Var sequence_lower_bound(const BoundParams& p, const GeneratorShape& shape,
                             std::span<const RealSequence> batch, double sigma_train, Rng& rng);

/// -mean[label log D(real) + (1 - label) log(1 - D(real))] - mean[log(1 - D(fake))].
/// `real_label` < 1 gives one-sided label smoothing.
ad::Var discriminator_loss(ad::Var real_logits, ad::Var fake_logits, double real_label = 1.0);
/// Non-saturating generator loss -mean[log D(fake)].
ad::Var generator_gan_loss(ad::Var fake_logits);

struct LossBreakdown {
  double ml_term = 0.0;
  double gan_term = 0.0;
  double rl_term = 0.0;
  double total = 0.0;
};

struct GeneratorLoss {
  LossBreakdown breakdown;
  ad::Var total;
};

/// total = ml + lambda * gan + alpha * rl. An invalid (default) Var for gan or
/// rl means the term was not computed and contributes exactly 0.
GeneratorLoss total_generator_loss(ad::Var ml, ad::Var gan, ad::Var rl, double lambda_gan,
                                   double alpha_rl);

// ---------------------------------------------------------------------------
// Value-level conveniences.

double sequence_lower_bound(const GeneratorParams& gen, const TokenSequence& seq);
double sequence_lower_bound(const GeneratorParams& gen, const RealSequence& seq,
                            double sigma_train, Rng& rng);
double discriminator_loss(const DiscriminatorParams& d, std::span<const Matrix> real,
                          std::span<const Matrix> fake);
double generator_gan_loss(const DiscriminatorParams& d, std::span<const Matrix> fake);

}  // namespace goalseq
