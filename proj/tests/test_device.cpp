#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <numeric>
#include <thread>

#include "ndactor/device.hpp"
#include "ndactor/mem_ref.hpp"

using namespace ndactor;

TEST_CASE("explicit work-group dimensions are validated") {
  CHECK(resolve_local(NdRange::linear(1024, 128), 256) ==
        std::array<std::size_t, 3>{128, 1, 1});
  CHECK_THROWS_AS(resolve_local(NdRange::linear(1000, 128), 256), DeviceError);
  CHECK_THROWS_AS(resolve_local(NdRange::grid2(64, 64, 32, 32), 256),
                  DeviceError);
  CHECK(resolve_local(NdRange::grid2(64, 64, 16, 16), 256) ==
        std::array<std::size_t, 3>{16, 16, 1});
  CHECK_THROWS_AS(resolve_local(NdRange::linear(0), 256), DeviceError);
  CHECK_THROWS_AS(resolve_local(NdRange::linear(8, 0), 256), DeviceError);
}

TEST_CASE("default work-group is the largest divisor under the cap") {
  CHECK(resolve_local(NdRange::linear(1000), 256) ==
        std::array<std::size_t, 3>{250, 1, 1});
  CHECK(resolve_local(NdRange::linear(512), 256) ==
        std::array<std::size_t, 3>{256, 1, 1});
  // Primes fall back to single-item groups.
  CHECK(resolve_local(NdRange::linear(1009), 256) ==
        std::array<std::size_t, 3>{1009 > 256 ? 1 : 1009, 1, 1});
  // The cap limits the product across dimensions.
  CHECK(resolve_local(NdRange::grid2(1024, 1024), 256) ==
        std::array<std::size_t, 3>{256, 1, 1});
  CHECK(resolve_local(NdRange::grid2(16, 1024), 256) ==
        std::array<std::size_t, 3>{16, 16, 1});
}

TEST_CASE("buffers start zeroed and are counted while live") {
  Device dev;
  CHECK(dev.live_buffers() == 0);
  Buffer b = dev.create_buffer(ElemType::u32, 100);
  CHECK(dev.live_buffers() == 1);
  auto data = dev.read<std::uint32_t>(b);
  CHECK(data == std::vector<std::uint32_t>(100, 0));
  dev.free_buffer(b);
  CHECK(dev.live_buffers() == 0);
  CHECK_THROWS_AS(dev.free_buffer(b), DeviceError);
  CHECK_THROWS_AS(dev.create_buffer(ElemType::u32, -1), DeviceError);
}

TEST_CASE("write, kernel, read round trip") {
  Device dev;
  const std::size_t n = 1000;
  Buffer x = dev.create_buffer(ElemType::f32, n);
  Buffer y = dev.create_buffer(ElemType::f32, n);
  Buffer out = dev.create_buffer(ElemType::f32, n);

  std::vector<float> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = float(i);
    ys[i] = 0.5f * float(i);
  }
  Event wx = dev.enqueue_write(x, xs);
  Event wy = dev.enqueue_write(y, ys);

  KernelDef saxpy("saxpy", [](ItemCtx& it) {
    std::size_t i = it.global_id();
    float a = it.scalar<float>(0);
    it.buf<float>(3)[i] = a * it.buf<float>(1)[i] + it.buf<float>(2)[i];
  });
  Event k = dev.enqueue_kernel(
      saxpy, NdRange::linear(n),
      {KernelArg::scalar(2.0f), KernelArg::global(x), KernelArg::global(y),
       KernelArg::global(out)},
      {wx, wy});

  auto got = dev.read<float>(out, {k});
  for (std::size_t i = 0; i < n; ++i) REQUIRE(got[i] == 2.5f * float(i));
}

TEST_CASE("item ids cover the range exactly once, offsets included") {
  Device dev;
  const std::size_t gx = 24, gy = 10;
  Buffer marks = dev.create_buffer(ElemType::u32, gx * gy);
  KernelDef mark("mark", [](ItemCtx& it) {
    auto m = it.buf<std::uint32_t>(0);
    // Work out where this item believes it lives.
    std::size_t x = it.global_id(0) - 100;
    std::size_t y = it.global_id(1) - 7;
    std::size_t lin = y * it.global_size(0) + x;
    it.atomic_add(m, lin, 1u);
    if (it.linear_global_id() != lin) it.atomic_add(m, lin, 100u);
    std::size_t expect_x =
        it.group_id(0) * it.local_size(0) + it.local_id(0) + 100;
    if (it.global_id(0) != expect_x) it.atomic_add(m, lin, 1000u);
  });
  NdRange r = NdRange::grid2(gx, gy, 8, 2).with_offset(100, 7);
  Event k = dev.enqueue_kernel(mark, r, {KernelArg::global(marks)});
  auto got = dev.read<std::uint32_t>(marks, {k});
  CHECK(got == std::vector<std::uint32_t>(gx * gy, 1));
}

TEST_CASE("phases act as a group-wide barrier over local memory") {
  Device dev;
  const std::size_t n = 64, group = 16;
  Buffer in = dev.create_buffer(ElemType::u32, n);
  Buffer out = dev.create_buffer(ElemType::u32, n);
  std::vector<std::uint32_t> xs(n);
  std::iota(xs.begin(), xs.end(), 0u);
  Event w = dev.enqueue_write(in, xs);

  KernelDef reverse(
      "group_reverse",
      {[](ItemCtx& it) {
         it.buf<std::uint32_t>(2)[it.local_id()] =
             it.buf<std::uint32_t>(0)[it.global_id()];
       },
       [](ItemCtx& it) {
         it.buf<std::uint32_t>(1)[it.global_id()] =
             it.buf<std::uint32_t>(2)[it.local_size() - 1 - it.local_id()];
       }});
  Event k = dev.enqueue_kernel(
      reverse, NdRange::linear(n, group),
      {KernelArg::global(in), KernelArg::global(out),
       KernelArg::local(ElemType::u32, group)});
  auto got = dev.read<std::uint32_t>(out, {k});
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t g = i / group;
    CHECK(got[i] == g * group + (group - 1 - (i % group)));
  }
}

TEST_CASE("private slots persist across phases per item") {
  Device dev;
  const std::size_t n = 32;
  Buffer out = dev.create_buffer(ElemType::u32, n);
  KernelDef k("carry",
              {[](ItemCtx& it) {
                 it.priv<std::uint32_t>(0) =
                     std::uint32_t(it.global_id() * 3 + 1);
               },
               [](ItemCtx& it) {
                 it.buf<std::uint32_t>(0)[it.global_id()] =
                     it.priv<std::uint32_t>(0);
               }});
  Event e = dev.enqueue_kernel(k, NdRange::linear(n, 8),
                               {KernelArg::global(out)});
  auto got = dev.read<std::uint32_t>(out, {e});
  for (std::size_t i = 0; i < n; ++i) CHECK(got[i] == i * 3 + 1);
}

TEST_CASE("atomic adds from every item land") {
  Device dev({.compute_units = 8});
  const std::size_t n = 100000;
  Buffer hist = dev.create_buffer(ElemType::u32, 16);
  KernelDef k("hist", [](ItemCtx& it) {
    auto h = it.buf<std::uint32_t>(0);
    it.atomic_add(h, it.global_id() % 16, 1u);
  });
  Event e = dev.enqueue_kernel(k, NdRange::linear(n), {KernelArg::global(hist)});
  auto got = dev.read<std::uint32_t>(hist, {e});
  std::uint32_t sum = 0;
  for (auto v : got) sum += v;
  CHECK(sum == n);
  CHECK(got[0] == n / 16);
}

TEST_CASE("commands wait for their dependency events") {
  Device dev({.compute_units = 4});
  Buffer b = dev.create_buffer(ElemType::u32, 1);
  KernelDef add_once("add1", [](ItemCtx& it) {
    auto v = it.buf<std::uint32_t>(0);
    v[0] = v[0] * 10 + 1;
  });
  // A chain must execute in order even with idle workers around.
  Event e1 = dev.enqueue_kernel(add_once, NdRange::linear(1), {KernelArg::global(b)});
  Event e2 = dev.enqueue_kernel(add_once, NdRange::linear(1), {KernelArg::global(b)}, {e1});
  Event e3 = dev.enqueue_kernel(add_once, NdRange::linear(1), {KernelArg::global(b)}, {e2});
  auto got = dev.read<std::uint32_t>(b, {e3});
  CHECK(got[0] == 111);
  CHECK(e1.exec_start_time() >= e1.enqueue_time());
  CHECK(e2.exec_start_time() >= e1.terminal_time());
  CHECK(e3.exec_start_time() >= e2.terminal_time());
}

TEST_CASE("a failing kernel fails its event and its dependents") {
  Device dev;
  Buffer b = dev.create_buffer(ElemType::u32, 8);
  KernelDef bad("bad", [](ItemCtx& it) {
    it.buf<std::uint32_t>(0)[it.global_id()] = it.buf<std::uint32_t>(1)[0];
  });
  Event e = dev.enqueue_kernel(bad, NdRange::linear(8), {KernelArg::global(b)});
  CHECK(e.await() == EventState::failed);
  CHECK(e.error().find("bad") != std::string::npos);

  KernelDef fine("fine", [](ItemCtx& it) {
    it.buf<std::uint32_t>(0)[it.global_id()] = 1;
  });
  Event dep = dev.enqueue_kernel(fine, NdRange::linear(8),
                                 {KernelArg::global(b)}, {e});
  CHECK(dep.await() == EventState::failed);
  CHECK(dep.error() == "dependency failed");
  CHECK_THROWS_AS(dev.read<std::uint32_t>(b, {dep}), DeviceError);
}

TEST_CASE("freeing a buffer rejects new commands but not in-flight ones") {
  Device dev({.compute_units = 2});
  Buffer b = dev.create_buffer(ElemType::u32, 4);
  KernelDef slow("slow", [](ItemCtx& it) {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    it.buf<std::uint32_t>(0)[it.global_id()] = 7;
  });
  auto sink = std::make_shared<std::vector<std::byte>>();
  Event k = dev.enqueue_kernel(slow, NdRange::linear(4, 4), {KernelArg::global(b)});
  Event r = dev.enqueue_read_bytes(b, sink, {k});
  dev.free_buffer(b);
  CHECK_THROWS_AS(dev.enqueue_write(b, std::vector<std::uint32_t>(4)),
                  DeviceError);
  CHECK(r.await() == EventState::complete);
  CHECK(sink->size() == 4 * sizeof(std::uint32_t));
  std::uint32_t first;
  std::memcpy(&first, sink->data(), 4);
  CHECK(first == 7);
}

TEST_CASE("event callbacks fire exactly once, late registrations instantly") {
  Device dev;
  Buffer b = dev.create_buffer(ElemType::u32, 1);
  Event w = dev.enqueue_write(b, std::vector<std::uint32_t>{5});
  std::atomic<int> fired{0};
  w.add_callback([&](EventState st) {
    CHECK(st == EventState::complete);
    fired.fetch_add(1);
  });
  w.await();
  w.add_callback([&](EventState) { fired.fetch_add(1); });
  CHECK(fired.load() == 2);
  dev.await_all();
}

TEST_CASE("group shuffling leaves order-free kernels deterministic") {
  auto run = [](std::uint64_t seed) {
    Device dev({.compute_units = 4, .max_group_size = 64,
                .shuffle_seed = seed});
    const std::size_t n = 4096;
    Buffer out = dev.create_buffer(ElemType::u32, n);
    KernelDef k("fill", [](ItemCtx& it) {
      it.buf<std::uint32_t>(0)[it.global_id()] =
          std::uint32_t(it.global_id() ^ 0x5aa5u);
    });
    Event e = dev.enqueue_kernel(k, NdRange::linear(n), {KernelArg::global(out)});
    return dev.read<std::uint32_t>(out, {e});
  };
  auto a = run(0);
  auto b = run(1234);
  auto c = run(99999);
  CHECK(a == b);
  CHECK(b == c);
}

TEST_CASE("references count shares and free on the last release") {
  Device dev;
  Buffer b = dev.create_buffer(ElemType::u32, 8);
  Event w = dev.enqueue_write(b, std::vector<std::uint32_t>(8, 3));
  MemRef ref(b, w);
  CHECK(dev.live_buffers() == 1);
  CHECK(ref.use_count() == 1);

  MemRef extra = ref.share();
  CHECK(ref.use_count() == 2);
  auto data = retrieve_u32(extra);
  CHECK(data == std::vector<std::uint32_t>(8, 3));

  extra.release();
  CHECK(dev.live_buffers() == 1);
  CHECK_THROWS_AS(extra.release(), DeviceError);
  CHECK_THROWS_AS(extra.share(), DeviceError);
  CHECK_THROWS_AS(retrieve_u32(extra), DeviceError);

  ref.release();
  CHECK(dev.live_buffers() == 0);
}

TEST_CASE("a reference dropped without release frees its share") {
  Device dev;
  Buffer b = dev.create_buffer(ElemType::u32, 4);
  {
    MemRef ref(b, Event{});
    CHECK(dev.live_buffers() == 1);
    MemRef copy = ref;  // aliases the same handle, no new share
    CHECK(copy.use_count() == 1);
  }
  CHECK(dev.live_buffers() == 0);
}

TEST_CASE("retrieve waits for the pending event") {
  Device dev({.compute_units = 2});
  Buffer b = dev.create_buffer(ElemType::u32, 4);
  KernelDef slow("slow_fill", [](ItemCtx& it) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    it.buf<std::uint32_t>(0)[it.global_id()] = 9;
  });
  Event k = dev.enqueue_kernel(slow, NdRange::linear(4, 4), {KernelArg::global(b)});
  MemRef ref(b, k);
  CHECK(retrieve_u32(ref) == std::vector<std::uint32_t>(4, 9));
  ref.release();
}

TEST_CASE("writes of the wrong size are rejected") {
  Device dev;
  Buffer b = dev.create_buffer(ElemType::u32, 4);
  CHECK_THROWS_AS(dev.enqueue_write(b, std::vector<std::uint32_t>(5)),
                  DeviceError);
  dev.free_buffer(b);
}
