// Serial reference vs OpenMP kernel timings. Arg(0) is the serial path, Arg(1) the parallel one.

#include <benchmark/benchmark.h>

#include "goalseq/harness.hpp"

#include <memory>

namespace goalseq {
namespace {

const TextTask& text_task() {
  static const TextTask task = make_text_task(1000, 500, 12, 30, 500, 2024);
  return task;
}

GeneratorParams text_generator() {
  GeneratorShape s;
  s.vocab_size = text_task().vocab.size();
  s.hidden = 32;
  return init_generator(s, 1);
}

void BM_BatchScore(benchmark::State& state) {
  const auto& task = text_task();
  const DiscriminatorParams d = init_discriminator({task.vocab.size(), 32, 32}, 2);
  std::vector<Matrix> xs;
  for (std::size_t i = 0; i < 256; ++i) xs.push_back(one_hot_rows(task.train[i], task.vocab.size()));
  for (auto _ : state) {
    benchmark::DoNotOptimize(state.range(0) ? batch_score(d, xs) : batch_score_serial(d, xs));
  }
}
BENCHMARK(BM_BatchScore)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_RolloutMatrix(benchmark::State& state) {
  const auto& task = text_task();
  const GeneratorParams g = text_generator();
  const auto refs = std::make_shared<const BleuReferences>(task.reward_refs, 3);
  const TokenRewardFn reward = make_bleu_reward(refs, 3, 0);
  const std::vector<TokenSequence> batch(task.train.begin(), task.train.begin() + 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(state.range(0) ? rollout_return_matrix(g, batch, 3, reward, 1)
                                            : rollout_return_matrix_serial(g, batch, 3, reward, 1));
  }
}
BENCHMARK(BM_RolloutMatrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BatchBleu(benchmark::State& state) {
  const auto& task = text_task();
  const BleuReferences refs(task.test_refs, 5);
  std::vector<std::vector<int>> samples;
  for (const auto& s : task.train) samples.push_back(strip_padding(s, 0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(state.range(0) ? batch_bleu(samples, refs, BleuConfig::uniform(5))
                                            : batch_bleu_serial(samples, refs, BleuConfig::uniform(5)));
  }
}
BENCHMARK(BM_BatchBleu)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BatchMcGrew(benchmark::State& state) {
  static const auto records = synth_stern_conversion(SternConversionParams{}, 500);
  for (auto _ : state) {
    benchmark::DoNotOptimize(state.range(0) ? batch_mcgrew(records, McGrewParams{})
                                            : batch_mcgrew_serial(records, McGrewParams{}));
  }
}
BENCHMARK(BM_BatchMcGrew)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SternConversion(benchmark::State& state) {
  const SternConversionParams p;
  for (auto _ : state) {
    benchmark::DoNotOptimize(state.range(0) ? synth_stern_conversion(p, 500) : synth_stern_conversion_serial(p, 500));
  }
}
BENCHMARK(BM_SternConversion)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SampleBatch(benchmark::State& state) {
  const GeneratorParams g = text_generator();
  for (auto _ : state) {
    benchmark::DoNotOptimize(state.range(0) ? sample_batch(g, 500, 12, 3) : sample_batch_serial(g, 500, 12, 3));
  }
}
BENCHMARK(BM_SampleBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace goalseq

BENCHMARK_MAIN();
