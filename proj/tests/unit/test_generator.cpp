#include <gtest/gtest.h>

#include "goalseq/generator.hpp"
#include "goalseq/objectives.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <numbers>

namespace goalseq {
namespace {

GeneratorParams uniform_generator(int vocab, int hidden = 3) {
  GeneratorShape s;
  s.vocab_size = vocab;
  s.embed_dim = 2;
  s.hidden = hidden;
  GeneratorParams g = init_generator(s, 1);
  g.tensors.at("out.W").setZero();
  g.tensors.at("out.b").setZero();
  return g;
}

/// Output bias strongly favours `token`.
GeneratorParams dominated_generator(int vocab, int token) {
  GeneratorParams g = uniform_generator(vocab);
  g.tensors.at("out.b")(0, token) = 60.0;
  return g;
}

TEST(TeacherForced, UniformSoftmaxGivesLogHalf) {
  const GeneratorParams g = uniform_generator(2);
  const TokenSequence seq{{1, 1, 1}, 3};
  const auto r = forward_teacher_forced(g, seq);
  ASSERT_EQ(r.log_likelihoods.size(), 3u);
  for (double l : r.log_likelihoods) EXPECT_NEAR(l, std::log(0.5), 1e-15);
  EXPECT_NEAR(sequence_lower_bound(g, seq), 3.0 * std::log(0.5), 1e-14);
}

TEST(TeacherForced, RealModeAtTheMean) {
  GeneratorParams g = oracle::micro_real(4, 3);
  g.tensors.at("out.W").setZero();
  g.tensors.at("out.b").setZero();
  RealSequence seq{Matrix::Zero(5, 3)};
  seq.values.row(0) << 0.3, -0.2, 1.0;
  const auto r = forward_teacher_forced(g, seq, 1.0);
  EXPECT_EQ(r.log_likelihoods[0], 0.0);
  for (std::size_t i = 1; i < r.log_likelihoods.size(); ++i) {
    EXPECT_NEAR(r.log_likelihoods[i], -1.5 * std::log(2.0 * std::numbers::pi), 1e-14);
  }
}

TEST(TeacherForced, MatchesStraightLineRecurrence) {
  Rng rng(7);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const GeneratorParams g = oracle::micro_discrete(seed);
    for (int len : {0, 2, 4}) {
      const TokenSequence seq = oracle::random_tokens(rng, oracle::kMicroVocab, oracle::kMicroSteps, len);
      const auto lib = forward_teacher_forced(g, seq).log_likelihoods;
      const auto ref = oracle::discrete_loglik_scalar(g, seq);
      ASSERT_EQ(lib.size(), ref.size());
      for (std::size_t t = 0; t < lib.size(); ++t) EXPECT_NEAR(lib[t], ref[t], 1e-12);
    }
  }
}

TEST(TeacherForced, PadsAfterTheFirstAreMasked) {
  const GeneratorParams g = oracle::micro_discrete(3);
  const TokenSequence seq{{3, 0, 0, 0}, 1};
  const auto r = forward_teacher_forced(g, seq);
  EXPECT_LT(r.log_likelihoods[1], 0.0);  // terminal pad is scored
  EXPECT_EQ(r.log_likelihoods[2], 0.0);
  EXPECT_EQ(r.log_likelihoods[3], 0.0);
}

TEST(TeacherForced, RejectsBadIds) {
  const GeneratorParams g = oracle::micro_discrete(3);
  EXPECT_THROW(forward_teacher_forced(g, TokenSequence{{7, 0}, 1}), ValidationError);
  EXPECT_THROW(forward_teacher_forced(g, RealSequence{Matrix::Zero(2, 2)}, 1.0), ValidationError);
}

TEST(TeacherForced, GradientsMatchFiniteDifferences) {
  Rng rng(3);
  std::vector<TokenSequence> batch;
  for (int len : {4, 2, 0}) batch.push_back(oracle::random_tokens(rng, oracle::kMicroVocab, oracle::kMicroSteps, len));
  for (int layers : {1, 2}) {
    const GeneratorParams g = oracle::micro_discrete(9, layers);
    const auto check = oracle::check_param_gradients(g.tensors, [&](const BoundParams& p) {
      return ad::sum(gen::discrete_log_likelihoods(p, g.shape, batch));
    });
    EXPECT_LT(check.max_rel_error, 1e-3) << layers;
    EXPECT_GT(check.max_abs_grad, 1e-3);
  }
  const GeneratorParams r = oracle::micro_real(9);
  std::vector<RealSequence> rb{oracle::random_real(rng, 4, 2), oracle::random_real(rng, 4, 2)};
  const auto check = oracle::check_param_gradients(r.tensors, [&](const BoundParams& p) {
    return ad::sum(gen::real_transition_log_likelihoods(p, r.shape, rb, 0.7));
  });
  EXPECT_LT(check.max_rel_error, 1e-3);
}

TEST(Gumbel, DominatedLogitsAlwaysPickTheWinner) {
  Rng rng(1);
  Vector logits(2);
  logits << 10.0, -10.0;
  int zeros = 0;
  for (int i = 0; i < 2000; ++i) zeros += gumbel_softmax_sample(logits, 0.5, rng).index == 0;
  EXPECT_GE(zeros, 1999);
}

TEST(Gumbel, HardIsArgmaxOfPerturbedLogits) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    Vector logits(4), g(4);
    for (int k = 0; k < 4; ++k) {
      logits(k) = rng.normal();
      g(k) = rng.gumbel();
    }
    const GumbelSample s = gumbel_softmax_sample(logits, g, 0.7);
    Eigen::Index arg = 0;
    (logits + g).maxCoeff(&arg);
    Eigen::Index soft_arg = 0;
    s.soft.maxCoeff(&soft_arg);
    EXPECT_EQ(s.index, arg);
    EXPECT_EQ(soft_arg, arg);
    EXPECT_EQ(s.hard.sum(), 1.0);
    EXPECT_EQ(s.hard(arg), 1.0);
    EXPECT_NEAR(s.soft.sum(), 1.0, 1e-12);
  }
}

TEST(Gumbel, LowTemperatureSharpens) {
  Rng rng(3);
  Vector logits(3);
  logits << 0.1, 0.0, -0.2;
  double prev = 0.0;
  for (double tau : {1.0, 0.3, 0.05, 0.01}) {
    Rng r(9);
    double mean_max = 0.0;
    for (int i = 0; i < 2000; ++i) mean_max += gumbel_softmax_sample(logits, tau, r).soft.maxCoeff();
    mean_max /= 2000;
    EXPECT_GT(mean_max, prev);
    prev = mean_max;
  }
  EXPECT_GT(prev, 0.99);
}

TEST(Gumbel, FrequenciesMatchSoftmax) {
  Rng rng(4);
  const Vector logits = Vector::Zero(3);
  std::vector<double> freq(3, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) freq[static_cast<std::size_t>(gumbel_softmax_sample(logits, 1.0, rng).index)] += 1.0 / n;
  double tv = 0.0;
  for (double f : freq) tv += 0.5 * std::abs(f - 1.0 / 3.0);
  EXPECT_LT(tv, 0.02);
}

TEST(Gumbel, RejectsNonPositiveTemperature) {
  Rng rng(1);
  EXPECT_THROW(gumbel_softmax_sample(Vector::Zero(2), 0.0, rng), ValidationError);
}

TEST(Sampling, RealZeroNoiseIsDeterministicForFixedLatent) {
  const GeneratorParams g = oracle::micro_real(5);
  Vector z(2);
  z << 0.4, -1.1;
  Rng a(1), b(2);
  const auto s1 = sample_sequence_from(g, z, 0.0, a, 6);
  const auto s2 = sample_sequence_from(g, z, 0.0, b, 6);
  EXPECT_EQ(s1.values.values, s2.values.values);
  EXPECT_LT((s1.values.values.row(0).transpose() - decode_first(g, z)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Sampling, DominatedDiscreteGeneratorIsDeterministic) {
  const GeneratorParams g = dominated_generator(5, 3);
  Rng a(1), b(99);
  const auto s1 = sample_sequence(g, 1.0, 0.0, a, 6);
  const auto s2 = sample_sequence(g, 1.0, 0.0, b, 6);
  EXPECT_EQ(s1.tokens.ids, std::vector<int>(6, 3));
  EXPECT_EQ(s1.tokens.ids, s2.tokens.ids);
}

TEST(Sampling, LogProbsMatchTeacherForcedRescoring) {
  const GeneratorParams g = oracle::micro_discrete(6);
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const auto s = sample_sequence(g, 1.0, 0.0, rng, oracle::kMicroSteps);
    const auto tf = forward_teacher_forced(g, s.tokens).log_likelihoods;
    ASSERT_EQ(s.log_probs.size(), tf.size());
    for (std::size_t t = 0; t < tf.size(); ++t) EXPECT_NEAR(s.log_probs[t], tf[t], 1e-6);
    for (const auto& soft : s.soft) EXPECT_NEAR(soft.sum(), 1.0, 1e-6);
  }
  const GeneratorParams r = oracle::micro_real(6);
  for (int i = 0; i < 100; ++i) {
    const auto s = sample_sequence(r, 1.0, 0.5, rng, 5, 0.8);
    const auto tf = forward_teacher_forced(r, s.values, 0.8).log_likelihoods;
    for (std::size_t t = 1; t < tf.size(); ++t) EXPECT_NEAR(s.log_probs[t], tf[t], 1e-6);
  }
}

TEST(Sampling, RelaxedTapeSamplerMatchesSingleSampler) {
  const GeneratorParams g = oracle::micro_discrete(8);
  Rng rng(4);
  ad::Tape tape;
  BoundParams p(tape, g.tensors, false);
  const auto rs = gen::sample_relaxed(p, g.shape, 20, oracle::kMicroSteps, 0.8, rng);
  for (int b = 0; b < 20; ++b) {
    TokenSequence seq;
    seq.ids = rs.tokens[static_cast<std::size_t>(b)];
    seq.true_length = static_cast<int>(std::find(seq.ids.begin(), seq.ids.end(), 0) - seq.ids.begin());
    const auto tf = forward_teacher_forced(g, seq).log_likelihoods;
    for (int t = 0; t < oracle::kMicroSteps; ++t) {
      EXPECT_NEAR(rs.log_probs.value()(b, t), tf[static_cast<std::size_t>(t)], 1e-12);
      EXPECT_NEAR(rs.soft[static_cast<std::size_t>(t)].value().row(b).sum(), 1.0, 1e-12);
    }
  }
}

TEST(Latent, KlClosedForms) {
  EXPECT_EQ(kl_to_prior({Vector::Zero(3), Vector::Ones(3)}), 0.0);
  EXPECT_NEAR(kl_to_prior({Vector::Ones(1), Vector::Ones(1)}), 0.5, 1e-15);
  EXPECT_THROW(kl_to_prior({Vector::Zero(1), Vector::Zero(1)}), ValidationError);
}

/// KL(N(mu, s^2) || N(0, 1)) by composite Simpson quadrature of q log(q/p).
double kl_quadrature(double mu, double s) {
  const double lo = mu - 14.0 * s, hi = mu + 14.0 * s;
  const int n = 20000;
  const double h = (hi - lo) / n;
  auto f = [&](double z) {
    const double lq = -0.5 * std::pow((z - mu) / s, 2) - std::log(s) - 0.5 * std::log(2 * std::numbers::pi);
    const double lp = -0.5 * z * z - 0.5 * std::log(2 * std::numbers::pi);
    return std::exp(lq) * (lq - lp);
  };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return acc * h / 3.0;
}

TEST(Latent, KlMatchesQuadrature) {
  Rng rng(10);
  LatentPosterior q{Vector(10), Vector(10)};
  double total = 0.0;
  for (int j = 0; j < 10; ++j) {
    q.mu(j) = 2.0 * rng.normal();
    q.sigma(j) = 0.2 + 2.0 * rng.uniform();
    total += kl_quadrature(q.mu(j), q.sigma(j));
  }
  EXPECT_NEAR(kl_to_prior(q), total, 1e-6);
  for (int i = 0; i < 100; ++i) {
    LatentPosterior r{Vector::Constant(1, rng.normal()), Vector::Constant(1, 0.1 + rng.uniform())};
    EXPECT_GE(kl_to_prior(r), 0.0);
  }
}

TEST(Latent, EncoderSigmaIsPositive) {
  const GeneratorParams g = oracle::micro_real(3);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    Vector x(2);
    x << 5.0 * rng.normal(), 5.0 * rng.normal();
    const auto q = encode_latent(g, x);
    EXPECT_GT(q.sigma.minCoeff(), 0.0);
  }
}

TEST(Shape, MetaRoundTrip) {
  const GeneratorParams g = oracle::micro_real(3);
  EXPECT_EQ(GeneratorShape::from_meta(g.shape.to_meta()), g.shape);
  GeneratorShape bad;
  EXPECT_THROW(bad.validate(), ValidationError);
  EXPECT_THROW(parse_mode("image"), ValidationError);
}

TEST(Init, SeedDeterminism) {
  const GeneratorParams a = oracle::micro_discrete(4), b = oracle::micro_discrete(4), c = oracle::micro_discrete(5);
  EXPECT_TRUE(a.tensors == b.tensors);
  EXPECT_FALSE(a.tensors == c.tensors);
}

}  // namespace
}  // namespace goalseq
