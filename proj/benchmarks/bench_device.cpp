#include <benchmark/benchmark.h>

#include <numeric>
#include <random>
#include <vector>

#include "ndactor/device.hpp"
#include "ndactor/wah_device.hpp"

using namespace ndactor;

namespace {

void BM_kernel_dispatch(benchmark::State& state) {
  Device dev;
  KernelDef noop{"noop", [](ItemCtx&) {}};
  for (auto _ : state) {
    Event e = dev.enqueue_kernel(noop, NdRange::linear(1), {});
    dev.await_all();
    benchmark::DoNotOptimize(e);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_kernel_dispatch);

void BM_scan(benchmark::State& state) {
  Device dev;
  const std::int64_t n = state.range(0);
  std::vector<std::uint32_t> host(static_cast<std::size_t>(n), 1);
  Buffer in = dev.create_buffer(ElemType::u32, n, Access::read_write);
  dev.enqueue_write(in, host);
  dev.await_all();
  for (auto _ : state) {
    wah::ScanResult r = wah::scan_exclusive(dev, in, n);
    dev.await_all();
    dev.free_buffer(r.sums);
  }
  dev.free_buffer(in);
  state.SetBytesProcessed(state.iterations() * n * 4);
}
BENCHMARK(BM_scan)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20);

void BM_sort_pairs(benchmark::State& state) {
  Device dev;
  const std::int64_t n = state.range(0);
  std::mt19937 rng(7);
  std::vector<std::uint32_t> keys(static_cast<std::size_t>(n));
  std::vector<std::uint32_t> vals(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    keys[i] = rng();
    vals[i] = static_cast<std::uint32_t>(i);
  }
  Buffer kb = dev.create_buffer(ElemType::u32, n, Access::read_write);
  Buffer vb = dev.create_buffer(ElemType::u32, n, Access::read_write);
  for (auto _ : state) {
    state.PauseTiming();
    dev.enqueue_write(kb, keys);
    dev.enqueue_write(vb, vals);
    dev.await_all();
    state.ResumeTiming();
    wah::sort_pairs(dev, kb, vb, n);
    dev.await_all();
  }
  dev.free_buffer(kb);
  dev.free_buffer(vb);
  state.SetBytesProcessed(state.iterations() * n * 8);
}
BENCHMARK(BM_sort_pairs)->Arg(1 << 14)->Arg(1 << 17);

}  // namespace

BENCHMARK_MAIN();
