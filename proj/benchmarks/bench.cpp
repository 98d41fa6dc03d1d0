#include <vector>

#include <benchmark/benchmark.h>

#include "pbwpcn/auction.hpp"
#include "pbwpcn/coop.hpp"
#include "pbwpcn/experiments.hpp"
#include "pbwpcn/scalar.hpp"

using namespace pbwpcn;

static void BM_LambertZMinusOne(benchmark::State& state) {
  double a = 0.37;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lambert_z_minus_one(a));
    a = a < 1e4 ? a * 1.7 : 0.37;
  }
}
BENCHMARK(BM_LambertZMinusOne);

static void BM_DerivePairs(benchmark::State& state) {
  const PaperInstance inst = load_paper_instance();
  for (auto _ : state) benchmark::DoNotOptimize(derive_pairs(inst.params, inst.channels));
}
BENCHMARK(BM_DerivePairs);

static void BM_Waterfill(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto channels = draw_channels(ChannelModel{}, 1, 0, n);
  const auto pairs = derive_pairs(SystemParams::defaults(n), channels);
  for (auto _ : state) benchmark::DoNotOptimize(waterfill(pairs, 0.25 * double(n)));
}
BENCHMARK(BM_Waterfill)->Arg(3)->Arg(10)->Arg(100);

static void BM_Auction(benchmark::State& state) {
  const PaperInstance inst = load_paper_instance(1.0);
  const AuctionConfig cfg{0.001, 1.0 / double(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(run_auction(inst.params, inst.channels, cfg));
}
BENCHMARK(BM_Auction)->Arg(100)->Arg(10000);
BENCHMARK_MAIN();
