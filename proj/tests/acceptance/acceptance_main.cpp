// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include "goalseq/cli.hpp"
#include "goalseq/harness.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace goalseq {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome identity_check() {
  const TheoryReport r = verify_theory(20240101, 100);
  return {r.max_identity_residual < 1e-9 && r.max_grid_violation <= 0.0,
          fmt("pairs %.0f, max residual %.3e, max grid violation %.3e", r.pairs, r.max_identity_residual,
              r.max_grid_violation)};
}

Outcome gradient_fidelity() {
  std::vector<std::pair<std::string, oracle::GradCheck>> checks;
  Rng rng(1);
  {
    const GeneratorParams g = oracle::micro_discrete(21);
    std::vector<TokenSequence> batch;
    for (int len : {4, 3, 1}) batch.push_back(oracle::random_tokens(rng, oracle::kMicroVocab, oracle::kMicroSteps, len));
    checks.emplace_back("ml discrete", oracle::check_param_gradients(g.tensors, [&](const BoundParams& p) {
      return ad::neg(ad::mean(sequence_lower_bound(p, g.shape, batch)));
    }));
  }
  {
    const GeneratorParams g = oracle::micro_real(22);
    std::vector<RealSequence> batch{oracle::random_real(rng, 4, 2), oracle::random_real(rng, 4, 2)};
    checks.emplace_back("ml real", oracle::check_param_gradients(g.tensors, [&](const BoundParams& p) {
      Rng eps(77);
      return ad::neg(ad::mean(sequence_lower_bound(p, g.shape, batch, 0.9, eps)));
    }));
  }
  const GeneratorParams gd = oracle::micro_discrete(23);
  const DiscriminatorParams dd = oracle::micro_disc(oracle::kMicroVocab, 24);
  checks.emplace_back("gan generator", oracle::check_param_gradients(gd.tensors, [&](const BoundParams& p) {
    Rng gumbel(5);
    BoundParams dp(p.tape(), dd.tensors, false);
    const auto s = gen::sample_relaxed(p, gd.shape, 3, oracle::kMicroSteps, 0.7, gumbel);
    return generator_gan_loss(disc::logits(dp, dd.shape, s.soft));
  }));
  {
    std::vector<Matrix> real, fake;
    for (int i = 0; i < 3; ++i) {
      real.push_back(one_hot_rows(oracle::random_tokens(rng, oracle::kMicroVocab, oracle::kMicroSteps, 3), oracle::kMicroVocab));
      Matrix soft(oracle::kMicroSteps, oracle::kMicroVocab);
      for (int t = 0; t < soft.rows(); ++t) soft.row(t) = random_simplex(oracle::kMicroVocab, rng).transpose();
      fake.push_back(soft);
    }
    checks.emplace_back("discriminator", oracle::check_param_gradients(dd.tensors, [&](const BoundParams& p) {
      ad::Tape& tape = p.tape();
      return discriminator_loss(disc::logits(p, dd.shape, disc::constant_steps(tape, real)),
                                disc::logits(p, dd.shape, disc::constant_steps(tape, fake)));
    }));
  }
  {
    Matrix returns(3, oracle::kMicroSteps);
    for (Eigen::Index i = 0; i < returns.size(); ++i) returns.data()[i] = rng.normal();
    checks.emplace_back("reinforce", oracle::check_param_gradients(gd.tensors, [&](const BoundParams& p) {
      Rng gumbel(8);
      const auto s = gen::sample_relaxed(p, gd.shape, 3, oracle::kMicroSteps, 1.0, gumbel);
      return reinforce_loss(s.log_probs, returns, 0.3);
    }));
  }
  double worst = 0.0;
  std::string detail;
  for (const auto& [name, c] : checks) {
    worst = std::max(worst, c.max_rel_error);
    detail += (detail.empty() ? "" : ", ") + name + fmt(" %.1e", c.max_rel_error);
  }
  return {worst < 1e-3, "max relative error per loss: " + detail};
}

Outcome reinforce_unbiased() {
  const double truth = oracle::bandit_closed_form(0.3, -0.2, 1.0, 0.0);
  const auto est = oracle::bandit_reinforce(0.3, -0.2, 1.0, 0.0, 100000, BaselineMode::running_mean(), 3);
  const double se = std::sqrt(est.variance / static_cast<double>(est.episodes));
  const auto plain = oracle::bandit_reinforce(0.3, -0.2, 6.0, 5.0, 100000, BaselineMode::fixed(0.0), 4);
  const auto running = oracle::bandit_reinforce(0.3, -0.2, 6.0, 5.0, 100000, BaselineMode::running_mean(), 4);
  const double ratio = running.variance / plain.variance;
  return {std::abs(est.mean - truth) < 3.0 * se && ratio < 1.0,
          fmt("mean %.5f vs closed form %.5f (%.2f SE); offset +5 variance ratio %.4f", est.mean, truth,
              std::abs(est.mean - truth) / se, ratio)};
}

Outcome rollout_consistency() {
  const GeneratorParams g = oracle::micro_discrete(6);
  const TokenRewardFn reward = [](const TokenSequence& s) {
    double r = 0.25 * s.true_length;
    for (int t = 0; t < s.true_length; ++t) r += s.ids[static_cast<std::size_t>(t)] == 3 ? 1.0 : 0.0;
    return r;
  };
  double worst = 0.0;
  for (const std::vector<int>& prefix : {std::vector<int>{}, std::vector<int>{4}}) {
    double mean = 0.0, second = 0.0;
    oracle::enumerate_completions(g, prefix, 2, 1.0, reward, mean, second);
    Rng rng(50 + prefix.size());
    const int k = 10000;
    const double est = rollout_returns(g, prefix, 2, k, reward, rng);
    worst = std::max(worst, std::abs(est - mean) / std::sqrt((second - mean * mean) / k));
  }
  return {worst < 3.0, fmt("worst deviation %.2f SE over 2 prefixes, K = 10000", worst)};
}

Outcome bleu_oracle() {
  Rng rng(31);
  int equal = 0;
  for (int pair = 0; pair < 50; ++pair) {
    const int n = 2 + pair % 4;
    auto draw = [&](std::size_t len) {
      std::vector<int> v(len);
      for (int& x : v) x = static_cast<int>(rng.index(4));
      return v;
    };
    const auto cand = draw(4 + rng.index(9));
    std::vector<std::vector<int>> refs;
    for (int r = 0; r < 3; ++r) refs.push_back(draw(4 + rng.index(9)));
    const double lib = bleu_n(cand, BleuReferences(refs, n), BleuConfig::uniform(n)).value;
    equal += lib == oracle::brute_force_bleu(cand, refs, n) ? 1 : 0;
  }
  const std::vector<int> s{4, 7, 2, 9, 3};
  const double identity = bleu_n(s, BleuReferences({s}, 5), BleuConfig::uniform(5)).value;
  const std::vector<int> other{1, 5, 6};
  const double disjoint = bleu_n(other, BleuReferences({s}, 2), BleuConfig::uniform(2)).value;
  return {equal == 50 && identity == 1.0 && disjoint == 0.0,
          fmt("%.0f/50 exact matches, identity %.1f, disjoint %.1f", equal, identity, disjoint)};
}

Outcome gumbel_fidelity() {
  Vector logits(6);
  logits << 1.2, -0.4, 0.0, 2.0, -1.5, 0.7;
  Vector p = (logits.array() - logits.maxCoeff()).exp().matrix();
  p /= p.sum();
  Rng rng(17);
  Vector counts = Vector::Zero(6);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts(gumbel_softmax_sample(logits, 1.0, rng).index) += 1.0;
  const double tv = 0.5 * (counts / n - p).cwiseAbs().sum();
  const TemperatureSchedule schedule{2.0, 0.1, 100};
  double max_soft = 0.0;
  for (int i = 0; i < 20000; ++i) max_soft += gumbel_softmax_sample(logits, schedule.at(100), rng).soft.maxCoeff();
  max_soft /= 20000;
  return {tv < 0.02 && max_soft > 0.95,
          fmt("TV %.4f at 1e5 samples; mean max soft component %.4f at tau %.2f", tv, max_soft, schedule.at(100))};
}

Outcome nll_calibration() {
  const TextTask task = make_text_task(1000, 500, 12, 30, 500, 2024);
  GeneratorShape shape;
  shape.vocab_size = task.vocab.size();
  GeneratorParams uniform = init_generator(shape, 1);
  uniform.tensors.at("out.W").setZero();
  uniform.tensors.at("out.b").setZero();
  const double nll = evaluate_nll_gen(uniform, task.test);
  const double gap = std::abs(nll - std::log(static_cast<double>(task.vocab.size())));

  GeneratorShape small;
  small.vocab_size = task.vocab.size();
  small.embed_dim = 16;
  small.hidden = 32;
  GeneratorParams g = init_generator(small, 2);
  const std::vector<TokenSequence> one{task.train[0]};
  const double initial = evaluate_nll_gen(g, one);
  PretrainOptions opt;
  opt.batch_size = 1;
  pretrain_mle(g, one, 200, opt, 3);
  const double final_nll = evaluate_nll_gen(g, one);
  return {gap < 1e-6 && final_nll < 0.1 * initial,
          fmt("uniform |NLL - ln V| %.2e (V = %.0f); memorization %.4f -> %.4f", gap, task.vocab.size(), initial,
              final_nll)};
}

// ---------------------------------------------------------------------------
// Trend runs

struct Variant {
  const char* name;
  double lambda;
  double alpha;
};

bool manifest_invariants(const RunManifest& m, double clip) {
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    const MetricRow& r = m.rows[i];
    if (r.d_updates != static_cast<long>(i) + 1 || r.g_updates != static_cast<long>(i) + 1) return false;
    if (!(r.grad_norm_post_clip <= clip + 1e-6)) return false;
  }
  return true;
}

struct TrendLog {
  bool invariants = true;
  long checked_rows = 0;
};

TrainConfig text_config(const Variant& v, std::uint64_t seed, long steps) {
  TrainConfig cfg;
  cfg.lambda_gan = v.lambda;
  cfg.alpha_rl = v.alpha;
  cfg.seed = seed;
  cfg.gumbel_temperature_schedule = {0.2, 0.05, steps};
  return cfg;
}

AdversarialOptions text_options() {
  AdversarialOptions ao;
  ao.gen_optimizer = OptimizerConfig::sgd(1e-3, 0.9);
  ao.disc_optimizer = OptimizerConfig::adam(1e-3);
  return ao;
}

GeneratorShape text_shape(int vocab) {
  GeneratorShape shape;
  shape.vocab_size = vocab;
  shape.embed_dim = 32;
  shape.hidden = 32;
  return shape;
}

Outcome text_trend(TrendLog& log) {
  const TextTask task = make_text_task(1000, 500, 12, 30, 500, 2024);
  const auto refs = std::make_shared<const BleuReferences>(task.reward_refs, 3);
  const TokenRewardFn reward = make_bleu_reward(refs, 3, 0);
  const long steps = 300;
  const Variant variants[] = {{"optigan", 1.0, 2.0}, {"onlygan", 1.0, 0.0}, {"onlyrl", 0.0, 2.0}};
  double bleu2[3] = {0, 0, 0}, nll[3] = {0, 0, 0};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    GeneratorParams pre = init_generator(text_shape(task.vocab.size()), seed);
    pretrain_mle(pre, task.train, 3, PretrainOptions{}, seed);
    for (int v = 0; v < 3; ++v) {
      GeneratorParams g = pre;
      DiscriminatorParams d = init_discriminator({task.vocab.size(), 32, 32}, seed + 100);
      const auto m = train_adversarial(g, d, task.train, text_config(variants[v], seed, steps), text_options(), steps,
                                       reward);
      log.invariants = log.invariants && manifest_invariants(m, 10.0);
      log.checked_rows += static_cast<long>(m.rows.size());
      bleu2[v] += evaluate_bleu_suite(g, task.test_refs, 500, task.steps, 99)[0] / 3.0;
      nll[v] += evaluate_nll_gen(g, task.test) / 3.0;
    }
  }
  return {bleu2[0] >= bleu2[1] && nll[0] <= nll[2],
          fmt("BLEU-2 optigan %.2f vs onlygan %.2f; NLL_gen optigan %.5f vs onlyrl %.5f", bleu2[0], bleu2[1], nll[0],
              nll[2])};
}

Outcome trajectory_trend(TrendLog& log) {
  SternConversionParams sp;
  sp.seed = 7;
  const TrajectoryTask task = make_trajectory_task(synth_stern_conversion(sp, 500));
  const McGrewParams mp;
  const StepRewardFn reward = make_mcgrew_reward(task.scaler, mp, task.dt);
  const Variant variants[] = {{"optigan", 0.2, 0.75}, {"gan-only", 0.2, 0.0}, {"mle-only", 0.0, 0.0}};
  double score[3] = {0, 0, 0};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    GeneratorShape shape;
    shape.mode = Mode::real;
    shape.feature_dim = task.train[0].features();
    shape.hidden = 32;
    GeneratorParams pre = init_generator(shape, seed);
    PretrainOptions po;
    po.sigma_train = 1.0;
    pretrain_mle(pre, task.train, 20, po, seed);
    for (int v = 0; v < 3; ++v) {
      GeneratorParams g = pre;
      DiscriminatorParams d = init_discriminator({shape.feature_dim, 32, 32}, seed + 100);
      TrainConfig cfg;
      cfg.lambda_gan = variants[v].lambda;
      cfg.alpha_rl = variants[v].alpha;
      cfg.seed = seed;
      cfg.sigma_train = 0.3;
      AdversarialOptions ao;
      ao.disc_optimizer = OptimizerConfig::adam(1e-3);
      const auto m = train_adversarial(g, d, task.train, cfg, ao, 200, reward);
      log.invariants = log.invariants && manifest_invariants(m, 10.0);
      log.checked_rows += static_cast<long>(m.rows.size());
      score[v] += evaluate_mcgrew(g, task.scaler, 200, task.steps, task.dt, 0.0, mp, 99) / 3.0;
    }
  }
  const bool optigan_over_gan = score[0] >= score[1];
  const bool mle_lowest = score[2] < score[0] && score[2] < score[1];
  return {optigan_over_gan && mle_lowest,
          fmt("McGrew optigan %.3f, gan-only %.3f, mle-only %.3f", score[0], score[1], score[2]) +
              (optigan_over_gan ? "; optigan >= gan-only holds" : "; optigan >= gan-only fails") +
              (mle_lowest ? "; mle-only lowest holds" : "; mle-only lowest fails")};
}

Outcome determinism(const TrendLog& log) {
  const TextTask task = make_text_task(1000, 500, 12, 30, 500, 2024);
  const auto refs = std::make_shared<const BleuReferences>(task.reward_refs, 3);
  const TokenRewardFn reward = make_bleu_reward(refs, 3, 0);
  auto run = [&] {
    GeneratorParams g = init_generator(text_shape(task.vocab.size()), 5);
    pretrain_mle(g, task.train, 1, PretrainOptions{}, 5);
    DiscriminatorParams d = init_discriminator({task.vocab.size(), 32, 32}, 105);
    return train_adversarial(g, d, task.train, text_config({"optigan", 1.0, 2.0}, 5, 40), text_options(), 40, reward)
        .metrics_jsonl();
  };
  const std::string a = run(), b = run();
  return {a == b && log.invariants && log.checked_rows > 0,
          std::string("repeat run metric logs ") + (a == b ? "bit-identical" : "differ") +
              "; D-then-G alternation and post-clip norm <= 10 " + (log.invariants ? "hold" : "violated") +
              fmt(" over %.0f logged steps", static_cast<double>(log.checked_rows))};
}

}  // namespace
}  // namespace goalseq

int main() {
  using namespace goalseq;
  struct Criterion {
    int id;
    double budget_s;
    std::function<Outcome()> run;
  };
  TrendLog log;
  const std::vector<Criterion> criteria = {
      {1, 5.0, identity_check},
      {2, 60.0, gradient_fidelity},
      {3, 30.0, reinforce_unbiased},
      {4, 30.0, rollout_consistency},
      {5, 5.0, bleu_oracle},
      {6, 30.0, gumbel_fidelity},
      {7, 60.0, nll_calibration},
      {8, 600.0, [&] { return text_trend(log); }},
      {9, 600.0, [&] { return trajectory_trend(log); }},
      {10, 120.0, [&] { return determinism(log); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double elapsed = seconds_since(t0);
    const bool pass = o.pass && elapsed < c.budget_s;
    failed += pass ? 0 : 1;
    std::printf("criterion %d: %s (%s; %.1f s, budget %.0f s)\n", c.id, pass ? "PASS" : "FAIL", o.detail.c_str(),
                elapsed, c.budget_s);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
