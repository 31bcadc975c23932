#include <benchmark/benchmark.h>

#include <memory>

#include "veriscope/neural.h"
#include "veriscope/rng.h"

namespace {

using namespace veriscope;

EncodedExample Example(std::size_t dim, std::size_t length, Rng& rng) {
  auto vectors = std::make_shared<WordMatrix>(dim, 200);
  for (Eigen::Index i = 0; i < vectors->size(); ++i) vectors->data()[i] = rng.Uniform(-1, 1);
  EncodedExample ex;
  ex.vectors = vectors;
  for (auto& seq : ex.branches) {
    for (std::size_t t = 0; t < length; ++t) {
      seq.ids.push_back(static_cast<int>(rng.Below(200)));
      seq.mask.push_back(1);
    }
  }
  ex.similarities = Eigen::VectorXd::Constant(24, 0.5);
  return ex;
}

// Inference over five branches at the default sizes (H = 25, hidden 60).
void BM_NnForward(benchmark::State& state) {
  Rng rng(3);
  const TrainConfig config;
  const NnModel model = NnModel::Init(100, 24, config, rng);
  const EncodedExample ex = Example(100, static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(nn_forward(model, ex));
}
BENCHMARK(BM_NnForward)->Arg(16)->Arg(64);

void BM_Gradient(benchmark::State& state) {
  Rng rng(4);
  const TrainConfig config;
  const NnModel model = NnModel::Init(100, 24, config, rng);
  const EncodedExample ex = Example(100, static_cast<std::size_t>(state.range(0)), rng);
  NnModel grad = NnModel::Zero(100, config.lstm_units, config.hidden_units, 24);
  for (auto _ : state) {
    benchmark::DoNotOptimize(accumulate_gradient(model, ex, Eigen::VectorXd(), &grad));
  }
}
BENCHMARK(BM_Gradient)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
