#include "goalseq/policy.hpp"

#include <cmath>
#include <exception>

namespace goalseq {

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> u(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    u[i] = acc;
  }
  return u;
}

ReturnTrace make_return_trace(std::vector<double> rewards, double gamma) {
  for (double r : rewards) {
    if (!std::isfinite(r)) throw ValidationError("returns: non-finite reward");
  }
  ReturnTrace tr;
  tr.returns = discounted_returns(rewards, gamma);
  tr.rewards = std::move(rewards);
  tr.gamma = gamma;
  return tr;
}

namespace {

/// State after feeding the start token and `prefix`, plus the logits for the next step.
struct PrefixState {
  HiddenState state;
  Matrix logits;
};

PrefixState run_prefix(const GeneratorParams& g, std::span<const int> prefix) {
  PrefixState ps{HiddenState::zeros(g.shape, 1), {}};
  int input = g.shape.start_id;
  for (std::size_t i = 0;; ++i) {
    const int ids[] = {input};
    ps.logits = infer::step(g, ps.state, infer::embed(g, ids));
    if (i == prefix.size()) break;
    input = prefix[i];
  }
  return ps;
}

double rollout_from(const GeneratorParams& g, std::span<const int> prefix, int steps, int k,
                    const TokenRewardFn& reward_fn, Rng& rng) {
  const GeneratorShape& shape = g.shape;
  const auto t0 = static_cast<int>(prefix.size());
  TokenSequence base;
  base.ids.assign(static_cast<std::size_t>(steps), shape.pad_id);
  base.true_length = t0;
  bool ended = false;
  for (int t = 0; t < t0; ++t) {
    const int id = prefix[static_cast<std::size_t>(t)];
    if (id < 0 || id >= shape.vocab_size) throw ValidationError("rollout: prefix id out of range");
    if (ended) continue;
    if (id == shape.pad_id) {
      ended = true;
      base.true_length = t;
    } else {
      base.ids[static_cast<std::size_t>(t)] = id;
    }
  }
  if (ended || t0 == steps) return reward_fn(base);

  // K completions advance together as the rows of one batch.
  PrefixState ps = run_prefix(g, prefix);
  HiddenState state;
  for (std::size_t l = 0; l < ps.state.h.size(); ++l) {
    state.h.push_back(ps.state.h[l].replicate(k, 1));
    state.c.push_back(ps.state.c[l].replicate(k, 1));
  }
  Matrix logits = ps.logits.replicate(k, 1);
  std::vector<TokenSequence> done(static_cast<std::size_t>(k), base);
  std::vector<char> alive(static_cast<std::size_t>(k), 1);
  std::vector<int> inputs(static_cast<std::size_t>(k));
  for (int t = t0; t < steps; ++t) {
    for (int r = 0; r < k; ++r) {
      const auto ri = static_cast<std::size_t>(r);
      int id = shape.pad_id;
      if (alive[ri]) {
        double best = -INFINITY;
        for (Eigen::Index v = 0; v < logits.cols(); ++v) {
          const double val = logits(r, v) + rng.gumbel();
          if (val > best) {
            best = val;
            id = static_cast<int>(v);
          }
        }
        if (id == shape.pad_id) {
          alive[ri] = 0;
          done[ri].true_length = t;
        } else {
          done[ri].ids[static_cast<std::size_t>(t)] = id;
        }
      }
      inputs[ri] = id;
    }
    if (t + 1 < steps) logits = infer::step(g, state, infer::embed(g, inputs));
  }
  for (int r = 0; r < k; ++r) {
    if (alive[static_cast<std::size_t>(r)]) done[static_cast<std::size_t>(r)].true_length = steps;
  }
  double sum = 0.0;
  for (const auto& s : done) sum += reward_fn(s);
  return sum / static_cast<double>(k);
}

void check_rollout_args(const GeneratorParams& g, int steps, int k) {
  if (g.shape.mode != Mode::discrete) throw ValidationError("rollout: discrete generator required");
  if (k < 1) throw ValidationError("rollout: K must be >= 1");
  if (steps < 1) throw ValidationError("rollout: steps must be >= 1");
}

bool estimated_column(int t, int steps, int stride) { return t == steps - 1 || (t + 1) % stride == 0; }

Matrix fill_gaps(Matrix m, int stride) {
  const Eigen::Index steps = m.cols();
  for (Eigen::Index t = steps - 1; t-- > 0;) {
    if (!estimated_column(static_cast<int>(t), static_cast<int>(steps), stride)) m.col(t) = m.col(t + 1);
  }
  return m;
}

struct Lane {
  int b;
  int t;
};

std::vector<Lane> rollout_lanes(std::span<const TokenSequence> batch, int steps, int stride) {
  std::vector<Lane> lanes;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].length() != steps) throw ValidationError("rollout: ragged batch");
    for (int t = 0; t < steps; ++t) {
      if (estimated_column(t, steps, stride)) lanes.push_back({static_cast<int>(b), t});
    }
  }
  return lanes;
}

double run_lane(const GeneratorParams& g, std::span<const TokenSequence> batch, const Lane& lane,
                int k, const TokenRewardFn& reward_fn, std::uint64_t seed) {
  const auto& ids = batch[static_cast<std::size_t>(lane.b)].ids;
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(lane.b), static_cast<std::uint64_t>(lane.t)));
  return rollout_from(g, std::span<const int>(ids.data(), static_cast<std::size_t>(lane.t) + 1),
                      static_cast<int>(ids.size()), k, reward_fn, rng);
}

}  // namespace

double rollout_returns(const GeneratorParams& gen, std::span<const int> prefix, int steps, int k,
                       const TokenRewardFn& reward_fn, Rng& rng) {
  check_rollout_args(gen, steps, k);
  if (static_cast<int>(prefix.size()) > steps) throw ValidationError("rollout: prefix longer than steps");
  return rollout_from(gen, prefix, steps, k, reward_fn, rng);
}

int default_rollout_stride(int steps) { return steps <= 16 ? 1 : 4; }

Matrix rollout_return_matrix_serial(const GeneratorParams& gen, std::span<const TokenSequence> batch,
                                    int k, const TokenRewardFn& reward_fn, std::uint64_t seed,
                                    int stride) {
  if (batch.empty()) throw ValidationError("rollout: empty batch");
  if (stride < 1) throw ValidationError("rollout: stride must be >= 1");
  const int steps = batch[0].length();
  check_rollout_args(gen, steps, k);
  Matrix u = Matrix::Zero(static_cast<Eigen::Index>(batch.size()), steps);
  for (const Lane& lane : rollout_lanes(batch, steps, stride)) {
    u(lane.b, lane.t) = run_lane(gen, batch, lane, k, reward_fn, seed);
  }
  return fill_gaps(std::move(u), stride);
}

Matrix rollout_return_matrix(const GeneratorParams& gen, std::span<const TokenSequence> batch, int k,
                             const TokenRewardFn& reward_fn, std::uint64_t seed, int stride) {
  if (batch.empty()) throw ValidationError("rollout: empty batch");
  if (stride < 1) throw ValidationError("rollout: stride must be >= 1");
  const int steps = batch[0].length();
  check_rollout_args(gen, steps, k);
  const std::vector<Lane> lanes = rollout_lanes(batch, steps, stride);
  std::vector<double> values(lanes.size());
  std::vector<std::exception_ptr> errors(lanes.size());
  const auto n = static_cast<long>(lanes.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto li = static_cast<std::size_t>(i);
    try {
      values[li] = run_lane(gen, batch, lanes[li], k, reward_fn, seed);
    } catch (...) {
      errors[li] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Matrix u = Matrix::Zero(static_cast<Eigen::Index>(batch.size()), steps);
  for (std::size_t i = 0; i < lanes.size(); ++i) u(lanes[i].b, lanes[i].t) = values[i];
  return fill_gaps(std::move(u), stride);
}

ad::Var reinforce_loss(ad::Var log_probs, const Matrix& returns, double baseline) {
  if (log_probs.rows() != returns.rows() || log_probs.cols() != returns.cols()) {
    throw ValidationError("reinforce_loss: log-prob and return shapes differ");
  }
  ad::Tape& tape = *log_probs.tape();
  const Matrix advantage = returns.array() - baseline;
  ad::Var weighted = ad::mul(log_probs, tape.constant(advantage));
  return ad::scale(ad::sum(weighted), -1.0 / static_cast<double>(returns.rows()));
}

double reinforce_loss(std::span<const double> log_probs, std::span<const double> returns,
                      double baseline) {
  if (log_probs.size() != returns.size()) {
    throw ValidationError("reinforce_loss: log-prob and return lengths differ");
  }
  double acc = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) acc += (returns[t] - baseline) * log_probs[t];
  return -acc;
}

BaselineState baseline_observe(BaselineState state, double episode_reward) {
  if (!std::isfinite(episode_reward)) throw ValidationError("baseline: non-finite reward");
  ++state.count;
  if (state.mode.kind == BaselineMode::Kind::running_mean) {
    state.mean += (episode_reward - state.mean) / static_cast<double>(state.count);
  }
  return state;
}

double baseline_value(const BaselineState& state) {
  return state.mode.kind == BaselineMode::Kind::fixed ? state.mode.value : state.mean;
}

}  // namespace goalseq
