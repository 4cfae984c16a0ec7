#pragma once

#include "goalseq/checkpoint.hpp"
#include "goalseq/config.hpp"
#include "goalseq/datasets.hpp"
#include "goalseq/discriminator.hpp"
#include "goalseq/generator.hpp"
#include "goalseq/objectives.hpp"
#include "goalseq/optimizer.hpp"
#include "goalseq/policy.hpp"
#include "goalseq/rewards.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace goalseq {

// ---------------------------------------------------------------------------
// Manifest and metric rows

/// One adversarial step. Keys in the JSONL log match the field names.
struct MetricRow {
  long step = 0;
  long d_updates = 0;  // cumulative, after this step
  long g_updates = 0;
  double tau = 0.0;
  double d_loss = 0.0;
  LossBreakdown loss;
  double grad_norm_pre_clip = 0.0;
  double grad_norm_post_clip = 0.0;
  double baseline = 0.0;     // value used in this step's RL term
  double mean_reward = 0.0;  // mean episode reward of this step's RL batch (0 when alpha = 0)
};

nlohmann::json to_json(const MetricRow& row);

struct RunManifest {
  std::string config_snapshot;
  std::map<std::string, std::string> dataset_fingerprints;
  std::uint64_t seed = 0;
  std::vector<MetricRow> rows;          // append-only
  std::vector<nlohmann::json> evaluations;

  /// One JSON object per metric row, newline-terminated.
  std::string metrics_jsonl() const;
  nlohmann::json to_json() const;
  void write_metrics(const std::filesystem::path& path) const;
  void write(const std::filesystem::path& path) const;
};

/// FNV-1a over the ids / raw doubles, hex encoded.
std::string fingerprint(std::span<const TokenSequence> data);
std::string fingerprint(std::span<const RealSequence> data);

// ---------------------------------------------------------------------------
// Training

struct PretrainOptions {
  int batch_size = 32;
  OptimizerConfig optimizer = OptimizerConfig::adam(5e-3);
  double grad_clip = 10.0;
  double sigma_train = 1.0;  // real mode
};

struct PretrainReport {
  std::vector<double> epoch_losses;  // mean -lower bound per sequence
};

/// Minibatch descent on -sequence_lower_bound. Epoch e shuffles with mix_seed(seed, e).
PretrainReport pretrain_mle(GeneratorParams& gen, std::span<const TokenSequence> data, int epochs,
                            const PretrainOptions& options, std::uint64_t seed);
PretrainReport pretrain_mle(GeneratorParams& gen, std::span<const RealSequence> data, int epochs,
                            const PretrainOptions& options, std::uint64_t seed);

struct AdversarialOptions {
  int batch_size = 32;
  OptimizerConfig gen_optimizer = OptimizerConfig::sgd(1e-3, 0.9);
  OptimizerConfig disc_optimizer = OptimizerConfig::sgd(1e-3, 0.9);
  double real_label = 1.0;  // < 1 enables one-sided label smoothing
  int rollout_stride = 0;   // 0 selects default_rollout_stride(T)
  long eval_every = 0;      // 0 disables periodic evaluation
  std::function<nlohmann::json(const GeneratorParams&, long step)> evaluator;
};

/// Per-step rewards of a generated real-valued sequence (model units).
using StepRewardFn = std::function<std::vector<double>(const RealSequence&)>;

/// Each step: one discriminator update, then one generator update on
/// ml + lambda * gan + alpha * rl with the gradient clipped at cfg.grad_clip.
/// Discrete mode uses rollout returns of `reward_fn`; real mode uses
/// discounted per-step rewards. Steps are numbered from `first_step`.
RunManifest train_adversarial(GeneratorParams& gen, DiscriminatorParams& disc,
                              std::span<const TokenSequence> data, const TrainConfig& cfg,
                              const AdversarialOptions& options, long steps,
                              const TokenRewardFn& reward_fn, long first_step = 0);
RunManifest train_adversarial(GeneratorParams& gen, DiscriminatorParams& disc,
                              std::span<const RealSequence> data, const TrainConfig& cfg,
                              const AdversarialOptions& options, long steps,
                              const StepRewardFn& reward_fn, long first_step = 0);

// ---------------------------------------------------------------------------
// Sampling and evaluation

/// Sample i draws from Rng(mix_seed(seed, i)); parallel over samples.
std::vector<SampledSequence> sample_batch(const GeneratorParams& gen, int count, int steps,
                                          std::uint64_t seed, double tau = 1.0,
                                          double sigma_sample = 0.0, double sigma_train = 1.0);
std::vector<SampledSequence> sample_batch_serial(const GeneratorParams& gen, int count, int steps,
                                                 std::uint64_t seed, double tau = 1.0,
                                                 double sigma_sample = 0.0,
                                                 double sigma_train = 1.0);

/// Ids before the first pad.
std::vector<int> strip_padding(const TokenSequence& seq, int pad_id);

/// Per-token NLL: total -log-likelihood over total scored positions
/// (real tokens plus the terminal pad).
double evaluate_nll_gen(const GeneratorParams& gen, std::span<const TokenSequence> data);
/// Real mode: mean over sequences of -lower bound, divided by T.
double evaluate_nll_gen(const GeneratorParams& gen, std::span<const RealSequence> data,
                        double sigma_train, std::uint64_t seed);

/// BLEU-2..5 percentages of `sample_count` hard samples against `test_refs`.
std::array<double, 4> evaluate_bleu_suite(const GeneratorParams& gen,
                                          const std::vector<std::vector<int>>& test_refs,
                                          int sample_count, int steps, std::uint64_t seed);

/// Mean reported McGrew score (10 x mean step score) of generated trajectories.
double evaluate_mcgrew(const GeneratorParams& gen, const FeatureScaler& scaler, int count,
                       int steps, double dt, double sigma_sample, const McGrewParams& params,
                       std::uint64_t seed);

/// BLEU-n reward on hard tokens against a fixed reference index.
TokenRewardFn make_bleu_reward(std::shared_ptr<const BleuReferences> refs, int n, int pad_id);
/// Per-step McGrew rewards of a generated (scaled) trajectory.
StepRewardFn make_mcgrew_reward(FeatureScaler scaler, McGrewParams params, double dt);

// ---------------------------------------------------------------------------
// Bundles: generator, optional discriminator, vocabulary or scaler, config.

struct ModelBundle {
  GeneratorParams gen;
  std::optional<DiscriminatorParams> disc;
  std::optional<Vocabulary> vocab;      // discrete
  std::optional<FeatureScaler> scaler;  // real
  TrainConfig config;
  int steps = 0;
  double dt = 1.0;
  long trained_steps = 0;
};

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Desk-scale experiment drivers.

struct TextTask {
  Vocabulary vocab;
  int steps = 12;
  std::vector<TokenSequence> train;
  std::vector<TokenSequence> test;
  std::vector<std::vector<int>> reward_refs;  // fixed subsample of train, pads stripped
  std::vector<std::vector<int>> test_refs;
};

/// Grammar corpus split into train/test; reward references are the first
/// `reward_refs` training sentences after a seeded shuffle.
TextTask make_text_task(int train_n, int test_n, int steps, int vocab_max, int reward_refs,
                        std::uint64_t seed);
TextTask make_text_task(const std::vector<std::vector<std::string>>& train,
                        const std::vector<std::vector<std::string>>& test, int steps,
                        int vocab_max, int reward_refs, std::uint64_t seed);

struct TrajectoryTask {
  std::vector<TrajectoryRecord> records;
  FeatureScaler scaler;
  std::vector<RealSequence> train;  // scaled
  int steps = kDefaultTrajectorySteps;
  double dt = 1.0;
};

TrajectoryTask make_trajectory_task(std::vector<TrajectoryRecord> records);

}  // namespace goalseq
