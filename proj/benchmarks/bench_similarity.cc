#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "veriscope/features.h"
#include "veriscope/rng.h"

namespace {

using namespace veriscope;

struct Data {
  IdfTable idf = IdfTable::LoadFile(std::string(VERISCOPE_BENCH_DATA_DIR) + "/idf.tsv");
  EmbeddingTable table =
      load_embeddings_file(std::string(VERISCOPE_BENCH_DATA_DIR) + "/embeddings.txt");

  std::string Text(Rng& rng, std::size_t words) const {
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
      s += table.words()[rng.Below(table.words().size())];
      s += (i % 12 == 11) ? ". " : " ";
    }
    return s;
  }
};

const Data& Shared() {
  static const Data data;
  return data;
}

void BM_CompareProfiles(benchmark::State& state) {
  const Data& d = Shared();
  Rng rng(1);
  const SimilarityContext ctx{&d.idf, &d.table};
  const TextProfile claim = make_profile(d.Text(rng, 15), ctx);
  const TextProfile other = make_profile(d.Text(rng, static_cast<std::size_t>(state.range(0))), ctx);
  for (auto _ : state) benchmark::DoNotOptimize(compare(claim, other));
}
BENCHMARK(BM_CompareProfiles)->Arg(20)->Arg(200);

void BM_BestTriplet(benchmark::State& state) {
  const Data& d = Shared();
  Rng rng(2);
  const SimilarityContext ctx{&d.idf, &d.table};
  const TextProfile claim = make_profile(d.Text(rng, 15), ctx);
  const std::string page = d.Text(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(best_triplet(claim, page, ctx));
}
BENCHMARK(BM_BestTriplet)->Arg(120)->Arg(1200);

}  // namespace

BENCHMARK_MAIN();
