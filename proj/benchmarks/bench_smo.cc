#include <benchmark/benchmark.h>

#include <vector>

#include "veriscope/rng.h"
#include "veriscope/svm.h"

namespace {

using namespace veriscope;

void BM_SvmTrain(benchmark::State& state) {
  Rng rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 3 == 0;
    std::vector<double> row(64);
    for (double& x : row) x = rng.Uniform(-1, 1) + (pos ? 0.3 : -0.3);
    rows.push_back(std::move(row));
    labels.push_back(pos ? Label::kTrue : Label::kFalse);
  }
  SvmConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(svm_train_smo(rows, labels, config));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SvmTrain)->Arg(80)->Arg(160)->Arg(320)->Complexity();

}  // namespace

BENCHMARK_MAIN();
