#include <benchmark/benchmark.h>

#include "ndactor/actor.hpp"

using namespace ndactor;

namespace {

ActorHandle spawn_adder(ActorSystem& sys) {
  return sys.spawn(Behavior{}.on(
      {ValueKind::i64}, [](Context&, Message m) {
        return HandlerResult::reply(Message::of(m.at(0).as_i64() + 1));
      }));
}

void BM_request_reply(benchmark::State& state) {
  ActorSystem sys;
  ActorHandle adder = spawn_adder(sys);
  std::int64_t i = 0;
  for (auto _ : state) {
    Reply r = sys.request(adder, Message::of(i++)).await();
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations());
  sys.shutdown();
}
BENCHMARK(BM_request_reply);

void BM_spawn_terminate(benchmark::State& state) {
  ActorSystem sys;
  for (auto _ : state) {
    ActorHandle a = spawn_adder(sys);
    sys.terminate(a);
  }
  sys.await_idle();
  state.SetItemsProcessed(state.iterations());
  sys.shutdown();
}
BENCHMARK(BM_spawn_terminate);

void BM_compose_chain(benchmark::State& state) {
  ActorSystem sys;
  ActorHandle chain = spawn_adder(sys);
  for (std::int64_t d = 1; d < state.range(0); ++d)
    chain = sys.compose(spawn_adder(sys), chain);
  for (auto _ : state) {
    Reply r = sys.request(chain, Message::of(std::int64_t(0))).await();
    if (is_error(r) || get_message(r).at(0).as_i64() != state.range(0))
      state.SkipWithError("chain answered incorrectly");
  }
  state.SetItemsProcessed(state.iterations());
  sys.shutdown();
}
BENCHMARK(BM_compose_chain)->Arg(1)->Arg(4)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
