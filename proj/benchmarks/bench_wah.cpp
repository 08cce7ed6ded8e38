#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ndactor/actor.hpp"
#include "ndactor/device.hpp"
#include "ndactor/wah.hpp"
#include "ndactor/wah_device.hpp"

using namespace ndactor;

namespace {

std::vector<std::uint32_t> synthetic_column(std::size_t rows,
                                            std::uint32_t cardinality) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<std::uint32_t> pick(0, cardinality - 1);
  std::vector<std::uint32_t> values(rows);
  for (auto& v : values) v = pick(rng);
  return values;
}

void BM_encode(benchmark::State& state) {
  std::mt19937 rng(3);
  std::bernoulli_distribution bit(0.01);
  std::vector<bool> bits(1 << 17);
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = bit(rng);
  for (auto _ : state) {
    std::vector<std::uint32_t> words = wah::encode(bits);
    benchmark::DoNotOptimize(words);
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(bits.size()));
}
BENCHMARK(BM_encode);

void BM_reference_index(benchmark::State& state) {
  std::vector<std::uint32_t> values =
      synthetic_column(static_cast<std::size_t>(state.range(0)), 100);
  for (auto _ : state) {
    wah::WahIndex idx = wah::reference_index(values);
    benchmark::DoNotOptimize(idx);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_reference_index)->Arg(1 << 15)->Arg(1 << 18);

void BM_device_index(benchmark::State& state) {
  ActorSystem sys;
  Device dev;
  std::vector<std::uint32_t> values =
      synthetic_column(static_cast<std::size_t>(state.range(0)), 100);
  for (auto _ : state) {
    wah::WahIndex idx = wah::build_index(sys, dev, values);
    benchmark::DoNotOptimize(idx);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  sys.shutdown();
}
BENCHMARK(BM_device_index)->Arg(1 << 15)->Arg(1 << 18);

void BM_compact(benchmark::State& state) {
  ActorSystem sys;
  Device dev;
  wah::CompactionStages st = wah::spawn_compaction(sys, dev);
  std::mt19937 rng(5);
  std::bernoulli_distribution keep(0.1);
  std::vector<std::uint32_t> input(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < input.size(); ++i)
    input[i] = keep(rng) ? static_cast<std::uint32_t>(i + 1) : 0;
  for (auto _ : state) {
    std::vector<std::uint32_t> packed = wah::compact(sys, dev, st, input);
    benchmark::DoNotOptimize(packed);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  for (const ActorHandle& a : {st.fused, st.move, st.count, st.prepare})
    sys.terminate(a);
  sys.await_idle();
  sys.shutdown();
}
BENCHMARK(BM_compact)->Arg(1 << 16);

}  // namespace

BENCHMARK_MAIN();
