#include <benchmark/benchmark.h>

#include <random>

#include "dhmm/data_io.hpp"
#include "dhmm/hmm.hpp"
#include "dhmm/kernel.hpp"
#include "dhmm/learning.hpp"

namespace {

using namespace dhmm;

HmmParams random_params(int k, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.emission_init = EmissionInitStyle::kStandard;
  cfg.seed = seed;
  std::mt19937_64 rng(seed);
  return init_params(k, {EmissionFamily::kGaussian, 0}, cfg, rng);
}

ObservationSequence random_seq(const HmmParams& params, int t_len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_sequence(params, t_len, rng);
}

void BM_ForwardBackward(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const int t_len = static_cast<int>(state.range(1));
  const HmmParams params = random_params(k, 7);
  const ObservationSequence seq = random_seq(params, t_len, 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_backward(params, seq));
  }
}
BENCHMARK(BM_ForwardBackward)->Args({5, 6})->Args({15, 50})->Args({26, 250});

void BM_Viterbi(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const int t_len = static_cast<int>(state.range(1));
  const HmmParams params = random_params(k, 7);
  const ObservationSequence seq = random_seq(params, t_len, 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(viterbi(params, seq));
  }
}
BENCHMARK(BM_Viterbi)->Args({5, 6})->Args({26, 250});

void BM_LogDetGradient(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const HmmParams params = random_params(k, 13);
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_det_kernel_gradient(params.a));
  }
}
BENCHMARK(BM_LogDetGradient)->Arg(5)->Arg(15)->Arg(26);

void BM_SimplexProjection(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 2.0);
  Vector v(k);
  for (int i = 0; i < k; ++i) v[i] = normal(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(project_to_simplex(v));
  }
}
BENCHMARK(BM_SimplexProjection)->Arg(5)->Arg(26)->Arg(200);

void BM_EmIteration(benchmark::State& state) {
  ToyConfig toy = ToyConfig::defaults();
  toy.n_sequences = 100;
  const ToyDataset dataset = generate_toy_dataset(toy);
  const HmmParams params = random_params(5, 23);
  for (auto _ : state) {
    auto [stats, ll] = e_step(params, dataset.corpus);
    benchmark::DoNotOptimize(update_transitions_closed_form(stats));
    benchmark::DoNotOptimize(ll);
  }
}
BENCHMARK(BM_EmIteration);

}  // namespace

BENCHMARK_MAIN();
