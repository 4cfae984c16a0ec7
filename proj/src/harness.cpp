#include "goalseq/harness.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

namespace goalseq {

nlohmann::json to_json(const MetricRow& row) {
  return nlohmann::json{{"step", row.step},
                        {"d_updates", row.d_updates},
                        {"g_updates", row.g_updates},
                        {"tau", row.tau},
                        {"d_loss", row.d_loss},
                        {"ml_term", row.loss.ml_term},
                        {"gan_term", row.loss.gan_term},
                        {"rl_term", row.loss.rl_term},
                        {"total", row.loss.total},
                        {"grad_norm_pre_clip", row.grad_norm_pre_clip},
                        {"grad_norm_post_clip", row.grad_norm_post_clip},
                        {"baseline", row.baseline},
                        {"mean_reward", row.mean_reward}};
}

std::string RunManifest::metrics_jsonl() const {
  std::string out;
  for (const auto& row : rows) out += goalseq::to_json(row).dump() + "\n";
  return out;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& row : rows) rows_json.push_back(goalseq::to_json(row));
  return nlohmann::json{{"config", config_snapshot},
                        {"dataset_fingerprints", dataset_fingerprints},
                        {"seed", seed},
                        {"rows", rows_json},
                        {"evaluations", evaluations}};
}

void RunManifest::write_metrics(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write metrics log: " + path.string());
  out << metrics_jsonl();
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write manifest: " + path.string());
  out << to_json().dump(2) << "\n";
}

namespace {

struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 0x100000001b3ULL;
    }
  }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

}  // namespace

std::string fingerprint(std::span<const TokenSequence> data) {
  Fnv f;
  for (const auto& s : data) {
    f.bytes(s.ids.data(), s.ids.size() * sizeof(int));
    f.bytes(&s.true_length, sizeof s.true_length);
  }
  return f.hex();
}

std::string fingerprint(std::span<const RealSequence> data) {
  Fnv f;
  for (const auto& s : data) {
    const Eigen::Index dims[2] = {s.values.rows(), s.values.cols()};
    f.bytes(dims, sizeof dims);
    f.bytes(s.values.data(), static_cast<std::size_t>(s.values.size()) * sizeof(double));
  }
  return f.hex();
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  return order;
}

template <class Seq>
std::vector<Seq> gather(std::span<const Seq> data, std::span<const std::size_t> idx) {
  std::vector<Seq> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data[i]);
  return out;
}

template <class Seq>
std::vector<Seq> random_batch(std::span<const Seq> data, int batch, Rng& rng) {
  std::vector<Seq> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) out.push_back(data[rng.index(data.size())]);
  return out;
}

/// One clipped descent step on -mean(lower bound). Returns the loss value.
template <class LowerBound>
double descend(GeneratorParams& gen, Optimizer& opt, double clip, LowerBound&& lower_bound) {
  ad::Tape tape;
  BoundParams p(tape, gen.tensors, true);
  ad::Var loss = ad::neg(ad::mean(lower_bound(p)));
  const double value = loss.scalar();
  if (!std::isfinite(value)) throw RuntimeFailure("pretraining diverged: non-finite loss");
  tape.backward(loss);
  GradSet grads = p.grads();
  clip_global_norm(grads, clip);
  opt.step(gen.tensors, grads);
  return value;
}

template <class Seq, class BatchLoss>
PretrainReport pretrain_loop(GeneratorParams& gen, std::span<const Seq> data, int epochs,
                             const PretrainOptions& options, std::uint64_t seed, BatchLoss&& batch_loss) {
  if (epochs < 0) throw ValidationError("pretrain: epochs must be >= 0");
  if (data.empty()) throw ValidationError("pretrain: empty dataset");
  if (options.batch_size < 1) throw ValidationError("pretrain: batch size must be >= 1");
  PretrainReport report;
  if (epochs == 0) return report;
  Optimizer opt(options.optimizer, gen.tensors);
  const auto bs = static_cast<std::size_t>(options.batch_size);
  for (int e = 0; e < epochs; ++e) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(e)));
    const auto order = shuffled(data.size(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(bs, order.size() - start));
      const auto batch = gather(data, idx);
      const double loss = descend(gen, opt, options.grad_clip, [&](const BoundParams& p) {
        return batch_loss(p, std::span<const Seq>(batch), rng);
      });
      total += loss * static_cast<double>(idx.size());
    }
    report.epoch_losses.push_back(total / static_cast<double>(data.size()));
  }
  return report;
}

}  // namespace

PretrainReport pretrain_mle(GeneratorParams& gen, std::span<const TokenSequence> data, int epochs,
                            const PretrainOptions& options, std::uint64_t seed) {
  return pretrain_loop(gen, data, epochs, options, seed,
                       [&](const BoundParams& p, std::span<const TokenSequence> batch, Rng&) {
                         return sequence_lower_bound(p, gen.shape, batch);
                       });
}

PretrainReport pretrain_mle(GeneratorParams& gen, std::span<const RealSequence> data, int epochs,
                            const PretrainOptions& options, std::uint64_t seed) {
  return pretrain_loop(gen, data, epochs, options, seed,
                       [&](const BoundParams& p, std::span<const RealSequence> batch, Rng& rng) {
                         return sequence_lower_bound(p, gen.shape, batch, options.sigma_train, rng);
                       });
}

// ---------------------------------------------------------------------------

namespace {

struct AdversarialState {
  Optimizer gen_opt;
  Optimizer disc_opt;
  BaselineState baseline;
  RunManifest manifest;
};

AdversarialState start_run(const GeneratorParams& gen, const DiscriminatorParams& disc,
                           const TrainConfig& cfg, const AdversarialOptions& options) {
  cfg.validate();
  if (options.batch_size < 1) throw ValidationError("train: batch size must be >= 1");
  if (!(options.real_label > 0.0 && options.real_label <= 1.0)) {
    throw ValidationError("train: real label must be in (0, 1]");
  }
  AdversarialState s{Optimizer(options.gen_optimizer, gen.tensors),
                     Optimizer(options.disc_optimizer, disc.tensors),
                     BaselineState{cfg.baseline_mode, 0, 0.0},
                     {}};
  s.manifest.config_snapshot = to_string(cfg);
  s.manifest.seed = cfg.seed;
  return s;
}

double update_discriminator(DiscriminatorParams& disc, Optimizer& opt, double real_label,
                            const std::vector<Matrix>& real, const std::vector<Matrix>& fake) {
  ad::Tape tape;
  BoundParams dp(tape, disc.tensors, true);
  const auto real_steps = disc::constant_steps(tape, real);
  const auto fake_steps = disc::constant_steps(tape, fake);
  ad::Var loss = discriminator_loss(disc::logits(dp, disc.shape, real_steps),
                                    disc::logits(dp, disc.shape, fake_steps), real_label);
  const double value = loss.scalar();
  if (!std::isfinite(value)) throw RuntimeFailure("non-finite discriminator loss");
  tape.backward(loss);
  opt.step(disc.tensors, dp.grads());
  return value;
}

/// Fake per-sequence matrices from per-step B x D blocks.
std::vector<Matrix> unstack(const std::vector<ad::Var>& steps) {
  const Eigen::Index rows = steps.front().rows();
  std::vector<Matrix> out(static_cast<std::size_t>(rows),
                          Matrix(static_cast<Eigen::Index>(steps.size()), steps.front().cols()));
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const Matrix& block = steps[t].value();
    for (Eigen::Index b = 0; b < rows; ++b) out[static_cast<std::size_t>(b)].row(static_cast<Eigen::Index>(t)) = block.row(b);
  }
  return out;
}

void finish_generator_step(GeneratorParams& gen, AdversarialState& st, const TrainConfig& cfg,
                           ad::Tape& tape, const BoundParams& gp, ad::Var ml, ad::Var gan, ad::Var rl,
                           MetricRow& row) {
  GeneratorLoss loss = total_generator_loss(ml, gan, rl, cfg.lambda_gan, cfg.alpha_rl);
  if (!std::isfinite(loss.breakdown.total)) {
    throw RuntimeFailure("non-finite generator loss at step " + std::to_string(row.step));
  }
  tape.backward(loss.total);
  GradSet grads = gp.grads();
  row.grad_norm_pre_clip = clip_global_norm(grads, cfg.grad_clip);
  row.grad_norm_post_clip = global_norm(grads);
  st.gen_opt.step(gen.tensors, grads);
  if (!gen.tensors.all_finite()) {
    throw RuntimeFailure("generator parameters became non-finite at step " + std::to_string(row.step));
  }
  row.loss = loss.breakdown;
}

/// Folds one observation per episode into the baseline: the mean of its returns over scored steps.
void observe_returns(BaselineState& baseline, const Matrix& returns, const Matrix& mask) {
  for (Eigen::Index b = 0; b < returns.rows(); ++b) {
    const double n = mask.row(b).sum();
    const double u = n > 0.0 ? returns.row(b).cwiseProduct(mask.row(b)).sum() / n : returns(b, returns.cols() - 1);
    baseline = baseline_observe(baseline, u);
  }
}

void maybe_evaluate(const AdversarialOptions& options, const GeneratorParams& gen, long step,
                    RunManifest& manifest) {
  if (options.eval_every > 0 && options.evaluator && (step + 1) % options.eval_every == 0) {
    manifest.evaluations.push_back(options.evaluator(gen, step));
  }
}

[[noreturn]] void reward_failure(long step, const std::exception& e) {
  throw RuntimeFailure("reward function failed at step " + std::to_string(step) + ": " + e.what());
}

}  // namespace

RunManifest train_adversarial(GeneratorParams& gen, DiscriminatorParams& disc,
                              std::span<const TokenSequence> data, const TrainConfig& cfg,
                              const AdversarialOptions& options, long steps,
                              const TokenRewardFn& reward_fn, long first_step) {
  if (gen.shape.mode != Mode::discrete) throw ValidationError("train: token data needs a discrete generator");
  if (data.empty()) throw ValidationError("train: empty dataset");
  if (disc.shape.input_dim != gen.shape.vocab_size) {
    throw ValidationError("train: discriminator input does not match the vocabulary");
  }
  if (cfg.alpha_rl > 0.0 && !reward_fn) throw ValidationError("train: alpha > 0 needs a reward function");
  AdversarialState st = start_run(gen, disc, cfg, options);
  st.manifest.dataset_fingerprints["train"] = fingerprint(data);
  const int batch = options.batch_size;
  const int seq_len = data[0].length();
  const int stride = options.rollout_stride > 0 ? options.rollout_stride : default_rollout_stride(seq_len);
  const int vocab = gen.shape.vocab_size;

  for (long s = 0; s < steps; ++s) {
    const long step = first_step + s;
    MetricRow row;
    row.step = step;
    row.tau = cfg.gumbel_temperature_schedule.at(step);
    const auto useed = static_cast<std::uint64_t>(step);

    // (a) discriminator
    Rng drng(mix_seed(cfg.seed, useed, 0));
    const auto real = random_batch(data, batch, drng);
    {
      std::vector<Matrix> real_x, fake_x;
      for (const auto& r : real) real_x.push_back(one_hot_rows(r, vocab));
      ad::Tape gt;
      BoundParams frozen(gt, gen.tensors, false);
      fake_x = unstack(gen::sample_relaxed(frozen, gen.shape, batch, seq_len, row.tau, drng).soft);
      row.d_loss = update_discriminator(disc, st.disc_opt, options.real_label, real_x, fake_x);
    }
    row.d_updates = s + 1;

    // (b) generator
    Rng grng(mix_seed(cfg.seed, useed, 1));
    ad::Tape tape;
    BoundParams gp(tape, gen.tensors, true);
    BoundParams dp(tape, disc.tensors, false);
    ad::Var ml = ad::neg(ad::mean(sequence_lower_bound(gp, gen.shape, real)));
    ad::Var gan, rl;
    row.baseline = baseline_value(st.baseline);
    if (cfg.lambda_gan > 0.0 || cfg.alpha_rl > 0.0) {
      gen::RelaxedSample sample = gen::sample_relaxed(gp, gen.shape, batch, seq_len, row.tau, grng);
      if (cfg.lambda_gan > 0.0) gan = generator_gan_loss(disc::logits(dp, disc.shape, sample.soft));
      if (cfg.alpha_rl > 0.0) {
        std::vector<TokenSequence> seqs;
        for (const auto& ids : sample.tokens) {
          TokenSequence ts{ids, seq_len};
          for (int t = 0; t < seq_len; ++t) {
            if (ids[static_cast<std::size_t>(t)] == gen.shape.pad_id) {
              ts.true_length = t;
              break;
            }
          }
          seqs.push_back(std::move(ts));
        }
        Matrix returns;
        try {
          returns = rollout_return_matrix(gen, seqs, cfg.rollouts_k, reward_fn, mix_seed(cfg.seed, useed, 2), stride);
        } catch (const std::exception& e) {
          reward_failure(step, e);
        }
        rl = reinforce_loss(sample.log_probs, returns, row.baseline);
        row.mean_reward = returns.col(seq_len - 1).mean();
        observe_returns(st.baseline, returns, sample.mask);
      }
    }
    finish_generator_step(gen, st, cfg, tape, gp, ml, gan, rl, row);
    row.g_updates = s + 1;
    st.manifest.rows.push_back(row);
    maybe_evaluate(options, gen, step, st.manifest);
  }
  return st.manifest;
}

RunManifest train_adversarial(GeneratorParams& gen, DiscriminatorParams& disc,
                              std::span<const RealSequence> data, const TrainConfig& cfg,
                              const AdversarialOptions& options, long steps,
                              const StepRewardFn& reward_fn, long first_step) {
  if (gen.shape.mode != Mode::real) throw ValidationError("train: real data needs a real-mode generator");
  if (data.empty()) throw ValidationError("train: empty dataset");
  if (disc.shape.input_dim != gen.shape.feature_dim) {
    throw ValidationError("train: discriminator input does not match the feature count");
  }
  if (cfg.alpha_rl > 0.0 && !reward_fn) throw ValidationError("train: alpha > 0 needs a reward function");
  AdversarialState st = start_run(gen, disc, cfg, options);
  st.manifest.dataset_fingerprints["train"] = fingerprint(data);
  const int batch = options.batch_size;
  const int seq_len = data[0].steps();

  for (long s = 0; s < steps; ++s) {
    const long step = first_step + s;
    MetricRow row;
    row.step = step;
    row.tau = cfg.gumbel_temperature_schedule.at(step);
    const auto useed = static_cast<std::uint64_t>(step);

    Rng drng(mix_seed(cfg.seed, useed, 0));
    const auto real = random_batch(data, batch, drng);
    {
      std::vector<Matrix> real_x;
      for (const auto& r : real) real_x.push_back(r.values);
      ad::Tape gt;
      BoundParams frozen(gt, gen.tensors, false);
      auto fake = gen::sample_real(frozen, gen.shape, batch, seq_len, cfg.sigma_sample, cfg.sigma_train, true, drng);
      std::vector<Matrix> fake_x;
      for (auto& v : fake.values) fake_x.push_back(std::move(v.values));
      row.d_loss = update_discriminator(disc, st.disc_opt, options.real_label, real_x, fake_x);
    }
    row.d_updates = s + 1;

    Rng grng(mix_seed(cfg.seed, useed, 1));
    ad::Tape tape;
    BoundParams gp(tape, gen.tensors, true);
    BoundParams dp(tape, disc.tensors, false);
    ad::Var ml = ad::neg(ad::mean(sequence_lower_bound(gp, gen.shape, real, cfg.sigma_train, grng)));
    ad::Var gan, rl;
    row.baseline = baseline_value(st.baseline);
    if (cfg.lambda_gan > 0.0) {
      auto fake = gen::sample_real(gp, gen.shape, batch, seq_len, cfg.sigma_sample, cfg.sigma_train, false, grng);
      gan = generator_gan_loss(disc::logits(dp, disc.shape, fake.steps));
    }
    if (cfg.alpha_rl > 0.0) {
      auto episodes = gen::sample_real(gp, gen.shape, batch, seq_len, cfg.sigma_train, cfg.sigma_train, true, grng);
      Matrix returns(batch, seq_len);
      double reward_sum = 0.0;
      for (int b = 0; b < batch; ++b) {
        std::vector<double> rewards;
        try {
          rewards = reward_fn(episodes.values[static_cast<std::size_t>(b)]);
        } catch (const std::exception& e) {
          reward_failure(step, e);
        }
        if (rewards.size() != static_cast<std::size_t>(seq_len)) {
          throw RuntimeFailure("reward function returned " + std::to_string(rewards.size()) +
                               " rewards for " + std::to_string(seq_len) + " steps at step " + std::to_string(step));
        }
        const auto u = make_return_trace(std::move(rewards), cfg.gamma);
        for (int t = 0; t < seq_len; ++t) returns(b, t) = u.returns[static_cast<std::size_t>(t)];
        reward_sum += std::accumulate(u.rewards.begin(), u.rewards.end(), 0.0) / seq_len;
      }
      rl = reinforce_loss(episodes.log_probs, returns, row.baseline);
      row.mean_reward = reward_sum / batch;
      observe_returns(st.baseline, returns, Matrix::Ones(batch, seq_len));
    }
    finish_generator_step(gen, st, cfg, tape, gp, ml, gan, rl, row);
    row.g_updates = s + 1;
    st.manifest.rows.push_back(row);
    maybe_evaluate(options, gen, step, st.manifest);
  }
  return st.manifest;
}

// ---------------------------------------------------------------------------

std::vector<SampledSequence> sample_batch_serial(const GeneratorParams& gen, int count, int steps,
                                                 std::uint64_t seed, double tau, double sigma_sample,
                                                 double sigma_train) {
  if (count < 0) throw ValidationError("sample count must be >= 0");
  std::vector<SampledSequence> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    out.push_back(sample_sequence(gen, tau, sigma_sample, rng, steps, sigma_train));
  }
  return out;
}

std::vector<SampledSequence> sample_batch(const GeneratorParams& gen, int count, int steps,
                                          std::uint64_t seed, double tau, double sigma_sample,
                                          double sigma_train) {
  if (count < 0) throw ValidationError("sample count must be >= 0");
  if (steps < 1) throw ValidationError("sample_sequence: steps must be >= 1");
  gen.shape.validate();
  std::vector<SampledSequence> out(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < count; ++i) {
    const auto si = static_cast<std::size_t>(i);
    try {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
      out[si] = sample_sequence(gen, tau, sigma_sample, rng, steps, sigma_train);
    } catch (...) {
      errors[si] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<int> strip_padding(const TokenSequence& seq, int pad_id) {
  std::vector<int> out;
  for (int id : seq.ids) {
    if (id == pad_id) break;
    out.push_back(id);
  }
  return out;
}

double evaluate_nll_gen(const GeneratorParams& gen, std::span<const TokenSequence> data) {
  if (data.empty()) throw ValidationError("evaluate_nll_gen: empty dataset");
  constexpr std::size_t kChunk = 256;
  double total = 0.0, count = 0.0;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const auto chunk = data.subspan(start, std::min(kChunk, data.size() - start));
    ad::Tape tape;
    BoundParams p(tape, gen.tensors, false);
    total += gen::discrete_log_likelihoods(p, gen.shape, chunk).value().sum();
    count += gen::discrete_mask(chunk).sum();
  }
  return -total / count;
}

double evaluate_nll_gen(const GeneratorParams& gen, std::span<const RealSequence> data,
                        double sigma_train, std::uint64_t seed) {
  if (data.empty()) throw ValidationError("evaluate_nll_gen: empty dataset");
  Rng rng(seed);
  ad::Tape tape;
  BoundParams p(tape, gen.tensors, false);
  const double total = sequence_lower_bound(p, gen.shape, data, sigma_train, rng).value().sum();
  return -total / (static_cast<double>(data.size()) * data[0].steps());
}

std::array<double, 4> evaluate_bleu_suite(const GeneratorParams& gen,
                                          const std::vector<std::vector<int>>& test_refs,
                                          int sample_count, int steps, std::uint64_t seed) {
  if (sample_count < 1) throw ValidationError("evaluate_bleu_suite: sample_count must be >= 1");
  const auto samples = sample_batch(gen, sample_count, steps, seed);
  std::vector<std::vector<int>> cands;
  for (const auto& s : samples) cands.push_back(strip_padding(s.tokens, gen.shape.pad_id));
  std::array<double, 4> out{};
  for (int n = 2; n <= 5; ++n) out[static_cast<std::size_t>(n - 2)] = corpus_bleu_percent(cands, test_refs, n);
  return out;
}

double evaluate_mcgrew(const GeneratorParams& gen, const FeatureScaler& scaler, int count, int steps,
                       double dt, double sigma_sample, const McGrewParams& params, std::uint64_t seed) {
  if (count < 1) throw ValidationError("evaluate_mcgrew: count must be >= 1");
  const auto samples = sample_batch(gen, count, steps, seed, 1.0, sigma_sample);
  std::vector<TrajectoryRecord> records;
  for (const auto& s : samples) records.push_back(scaler.inverse(s.values, dt));
  const auto means = batch_mcgrew(records, params);
  return 10.0 * std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
}

TokenRewardFn make_bleu_reward(std::shared_ptr<const BleuReferences> refs, int n, int pad_id) {
  const BleuConfig cfg = BleuConfig::uniform(n);
  if (n > refs->max_n()) throw ValidationError("BLEU reward order exceeds the reference index");
  return [refs = std::move(refs), cfg, pad_id](const TokenSequence& seq) {
    return bleu_n(strip_padding(seq, pad_id), *refs, cfg).value;
  };
}

StepRewardFn make_mcgrew_reward(FeatureScaler scaler, McGrewParams params, double dt) {
  params.validate();
  return [scaler = std::move(scaler), params, dt](const RealSequence& seq) {
    return trajectory_mcgrew(scaler.inverse(seq, dt), params).step_scores;
  };
}

// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::string& meta_at(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw ValidationError("checkpoint meta missing " + key);
  return it->second;
}

}  // namespace

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  Checkpoint ckpt;
  ckpt.meta = bundle.gen.shape.to_meta();
  ckpt.meta["mode"] = to_string(bundle.gen.shape.mode);
  ckpt.meta["config"] = to_string(bundle.config);
  ckpt.meta["steps"] = std::to_string(bundle.steps);
  ckpt.meta["dt"] = format_double(bundle.dt);
  ckpt.meta["trained_steps"] = std::to_string(bundle.trained_steps);
  add_prefixed(ckpt.tensors, bundle.gen.tensors, "gen/");
  if (bundle.disc) {
    for (auto& [k, v] : bundle.disc->shape.to_meta()) ckpt.meta[k] = v;
    add_prefixed(ckpt.tensors, bundle.disc->tensors, "disc/");
  }
  if (bundle.vocab) {
    std::string joined;
    for (const auto& t : bundle.vocab->tokens()) joined += t + "\n";
    ckpt.meta["vocab"] = joined;
  }
  if (bundle.scaler) {
    ckpt.tensors.add("scaler/mean", bundle.scaler->mean);
    ckpt.tensors.add("scaler/scale", bundle.scaler->scale);
  }
  save_checkpoint(path, ckpt);
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  ModelBundle b;
  b.gen.shape = GeneratorShape::from_meta(ckpt.meta);
  b.gen.tensors = take_prefixed(ckpt.tensors, "gen/");
  const GeneratorParams fresh = init_generator(b.gen.shape, 0);
  if (b.gen.tensors.size() != fresh.tensors.size()) throw ValidationError("checkpoint generator tensors incomplete: " + path.string());
  for (std::size_t i = 0; i < fresh.tensors.size(); ++i) {
    const Matrix& got = b.gen.tensors.at(fresh.tensors.name(i));
    if (got.rows() != fresh.tensors[i].rows() || got.cols() != fresh.tensors[i].cols()) {
      throw ValidationError("checkpoint tensor shape mismatch for " + fresh.tensors.name(i));
    }
  }
  b.config = parse_config(meta_at(ckpt.meta, "config"));
  try {
    b.steps = std::stoi(meta_at(ckpt.meta, "steps"));
    b.dt = std::stod(meta_at(ckpt.meta, "dt"));
    b.trained_steps = std::stol(meta_at(ckpt.meta, "trained_steps"));
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const ValidationError*>(&e)) throw;
    throw ValidationError("checkpoint meta malformed: " + path.string());
  }
  if (ckpt.meta.count("disc.input_dim")) {
    DiscriminatorParams d{DiscriminatorShape::from_meta(ckpt.meta), take_prefixed(ckpt.tensors, "disc/")};
    b.disc = std::move(d);
  }
  if (auto it = ckpt.meta.find("vocab"); it != ckpt.meta.end()) {
    std::vector<std::string> tokens;
    std::stringstream ss(it->second);
    std::string line;
    while (std::getline(ss, line)) tokens.push_back(line);
    b.vocab = Vocabulary(std::move(tokens));
  }
  if (ckpt.tensors.contains("scaler/mean")) {
    b.scaler = FeatureScaler{ckpt.tensors.at("scaler/mean"), ckpt.tensors.at("scaler/scale")};
  }
  return b;
}

// ---------------------------------------------------------------------------

TextTask make_text_task(const std::vector<std::vector<std::string>>& train,
                        const std::vector<std::vector<std::string>>& test, int steps, int vocab_max,
                        int reward_refs, std::uint64_t seed) {
  if (train.empty() || test.empty()) throw ValidationError("text task: empty split");
  TextTask task;
  task.steps = steps;
  task.vocab = build_vocab(train, vocab_max);
  for (const auto& s : train) task.train.push_back(encode(s, task.vocab, steps));
  for (const auto& s : test) {
    task.test.push_back(encode(s, task.vocab, steps));
    task.test_refs.push_back(strip_padding(task.test.back(), task.vocab.pad_id()));
  }
  Rng rng(mix_seed(seed, 0x7265));
  const auto order = shuffled(task.train.size(), rng);
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(reward_refs, 1)), order.size());
  for (std::size_t i = 0; i < keep; ++i) {
    task.reward_refs.push_back(strip_padding(task.train[order[i]], task.vocab.pad_id()));
  }
  return task;
}

TextTask make_text_task(int train_n, int test_n, int steps, int vocab_max, int reward_refs,
                        std::uint64_t seed) {
  if (train_n < 1 || test_n < 1) throw ValidationError("text task: split sizes must be >= 1");
  const auto lines = synth_grammar_corpus(train_n + test_n, seed);
  std::vector<std::vector<std::string>> train, test;
  for (int i = 0; i < train_n + test_n; ++i) {
    (i < train_n ? train : test).push_back(split_whitespace(lines[static_cast<std::size_t>(i)]));
  }
  return make_text_task(train, test, steps, vocab_max, reward_refs, seed);
}

TrajectoryTask make_trajectory_task(std::vector<TrajectoryRecord> records) {
  if (records.empty()) throw ValidationError("trajectory task: no records");
  TrajectoryTask task;
  task.steps = records.front().steps();
  task.dt = records.front().dt;
  task.scaler = FeatureScaler::fit(records);
  for (const auto& r : records) {
    if (r.steps() != task.steps) throw ValidationError("trajectory task: records differ in length");
    task.train.push_back(task.scaler.transform(r));
  }
  task.records = std::move(records);
  return task;
}

}  // namespace goalseq
