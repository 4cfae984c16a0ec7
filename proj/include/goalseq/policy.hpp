#pragma once

#include "goalseq/autodiff.hpp"
#include "goalseq/config.hpp"
#include "goalseq/generator.hpp"

#include <functional>
#include <span>
#include <vector>

namespace goalseq {

/// rewards[t] is the reward received after action t; returns[t] = sum_k gamma^k rewards[t + k].
struct ReturnTrace {
  std::vector<double> rewards;
  std::vector<double> returns;
  double gamma = 1.0;
};

/// Backward recursion U_t = R_{t+1} + gamma U_{t+1}.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);
ReturnTrace make_return_trace(std::vector<double> rewards, double gamma);

/// Maps a complete token sequence to a scalar. Must be safe to call concurrently.
using TokenRewardFn = std::function<double(const TokenSequence&)>;

/// Mean reward of K hard-sampled completions of `prefix` to `steps` tokens.
/// A prefix that already ended (contains pad) or is full length has exactly one completion.
double rollout_returns(const GeneratorParams& gen, std::span<const int> prefix, int steps, int k,
                       const TokenRewardFn& reward_fn, Rng& rng);

/// Rollout return estimates for a batch of sampled sequences: entry (b, t) is the
/// estimate for prefix ids[0..t] of sequence b, and column T-1 is the exact reward.
/// Only timesteps t with (t + 1) % stride == 0 (plus T-1) are estimated; the others
/// copy the nearest later estimate. Lane (b, t) draws from Rng(mix_seed(seed, b, t)),
/// so the result does not depend on thread count.
Matrix rollout_return_matrix(const GeneratorParams& gen, std::span<const TokenSequence> batch,
                             int k, const TokenRewardFn& reward_fn, std::uint64_t seed,
                             int stride = 1);
/// Serial reference for rollout_return_matrix.
Matrix rollout_return_matrix_serial(const GeneratorParams& gen,
                                    std::span<const TokenSequence> batch, int k,
                                    const TokenRewardFn& reward_fn, std::uint64_t seed,
                                    int stride = 1);

/// Default stride: every step for T <= 16, every 4th step beyond.
int default_rollout_stride(int steps);

/// -mean_b sum_t (U_bt - b) * logp_bt. `log_probs` and `returns` are B x T.
ad::Var reinforce_loss(ad::Var log_probs, const Matrix& returns, double baseline);
/// Single episode, value level.
double reinforce_loss(std::span<const double> log_probs, std::span<const double> returns,
                      double baseline);

struct BaselineState {
  BaselineMode mode;
  long count = 0;
  double mean = 0.0;  // arithmetic mean of observations
};

/// Running mode folds the reward into the mean; fixed mode only counts it.
BaselineState baseline_observe(BaselineState state, double episode_reward);
/// Fixed value, or the running mean (0 before any observation).
double baseline_value(const BaselineState& state);

}  // namespace goalseq
