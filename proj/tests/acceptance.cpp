// Acceptance gate for the runtime: ten checks, one PASS/FAIL line each,
// nonzero exit if anything fails. Tolerances and workload shapes are
// pinned here on purpose; loosening them is a code change, not a flag.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ndactor/actor.hpp"
#include "ndactor/bench.hpp"
#include "ndactor/device.hpp"
#include "ndactor/mem_ref.hpp"
#include "ndactor/wah.hpp"
#include "ndactor/wah_device.hpp"
#include "ndactor/wah_io.hpp"

using namespace ndactor;

namespace {

using SteadyClock = std::chrono::steady_clock;

double seconds_since(SteadyClock::time_point t0) {
  return std::chrono::duration<double>(SteadyClock::now() - t0).count();
}

int g_failures = 0;

void report(int num, const char* name, bool ok, const std::string& detail) {
  std::printf("%s %2d %s%s%s\n", ok ? "PASS" : "FAIL", num, name,
              detail.empty() ? "" : ": ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::vector<std::uint32_t> random_column(std::mt19937& rng, std::size_t rows,
                                         std::uint32_t cardinality) {
  std::uniform_int_distribution<std::uint32_t> pick(0, cardinality - 1);
  std::vector<std::uint32_t> values(rows);
  for (auto& v : values) v = pick(rng);
  return values;
}

// --- 1: pipeline index equals the sequential reference, serialized ----

bool index_equivalence(ActorSystem& sys, Device& dev, std::string& detail) {
  std::mt19937 rng(20260822);
  const std::array<std::uint32_t, 4> cards{1, 2, 10, 1000};
  auto t0 = SteadyClock::now();
  for (int i = 0; i < 100; ++i) {
    std::size_t rows = 1 + rng() % 100000;
    std::uint32_t card = cards[std::size_t(i) % cards.size()];
    std::vector<std::uint32_t> values = random_column(rng, rows, card);
    wah::WahIndex piped = wah::build_index(sys, dev, values);
    wah::WahIndex ref = wah::reference_index(values);
    if (wah::serialize_index(piped) != wah::serialize_index(ref)) {
      detail = "instance " + std::to_string(i) + " (rows " +
               std::to_string(rows) + ", card " + std::to_string(card) +
               ") diverged from the reference";
      return false;
    }
  }
  double secs = seconds_since(t0);
  char buf[96];
  std::snprintf(buf, sizeof buf, "100 instances byte-identical in %.1fs",
                secs);
  detail = buf;
  return secs < 120.0;
}

// --- 2: composed stages equal manual three-step application -----------

Message stage_message(Device& dev, std::span<const std::uint32_t> input) {
  std::size_t k = (input.size() + 1) / 2;
  std::vector<std::uint32_t> a(k, 0);
  std::vector<std::uint32_t> b(k, 0);
  for (std::size_t i = 0; i < input.size(); ++i)
    (i % 2 ? b : a)[i / 2] = input[i];
  Buffer cfg = dev.create_buffer(ElemType::u32, 2);
  Buffer ab = dev.create_buffer(ElemType::u32, std::int64_t(k));
  Buffer bb = dev.create_buffer(ElemType::u32, std::int64_t(k));
  Event wc = dev.enqueue_write(
      cfg, std::vector<std::uint32_t>{std::uint32_t(k), 0});
  Event wa = dev.enqueue_write(ab, a);
  Event wb = dev.enqueue_write(bb, b);
  return Message::of(MemRef(cfg, wc), MemRef(ab, wa), MemRef(bb, wb));
}

std::vector<std::uint32_t> finish_stage(const Reply& r) {
  if (is_error(r))
    throw std::runtime_error("stage failed: " + get_error(r).what);
  const Message& m = get_message(r);
  MemRef cfg = m.at(0).as_ref();
  MemRef packed = m.at(1).as_ref();
  std::uint32_t total = retrieve_u32(cfg)[1];
  std::vector<std::uint32_t> words = retrieve_u32(packed);
  release(cfg);
  release(packed);
  words.resize(total);
  return words;
}

bool composition_equation(ActorSystem& sys, Device& dev,
                          std::string& detail) {
  wah::CompactionStages st = wah::spawn_compaction(sys, dev);
  std::mt19937 rng(4242);
  bool ok = true;
  for (int i = 0; i < 50 && ok; ++i) {
    std::size_t n = 1 + rng() % 5000;
    std::uniform_int_distribution<std::uint32_t> word(0, 4);
    std::vector<std::uint32_t> input(n);
    for (auto& w : input) w = word(rng);

    Reply fused = sys.request(st.fused, stage_message(dev, input)).await();
    Reply prep = sys.request(st.prepare, stage_message(dev, input)).await();
    Reply counted = sys.request(st.count, get_message(prep)).await();
    Reply moved = sys.request(st.move, get_message(counted)).await();
    if (finish_stage(fused) != finish_stage(moved)) {
      detail = "instance " + std::to_string(i) + " (n " + std::to_string(n) +
               "): composed and stepwise outputs differ";
      ok = false;
    }
  }
  for (const ActorHandle& a : {st.fused, st.move, st.count, st.prepare})
    sys.terminate(a);
  sys.await_idle();
  dev.await_all();
  if (ok) detail = "50 instances element-exact";
  return ok;
}

// --- 3: compaction is the order-preserving nonzero filter -------------

bool compaction_filter(ActorSystem& sys, Device& dev, std::string& detail) {
  wah::CompactionStages st = wah::spawn_compaction(sys, dev);
  std::mt19937 rng(777);
  bool ok = true;
  for (int i = 0; i < 1000 && ok; ++i) {
    std::size_t n = 1 + rng() % 1500;
    std::vector<std::uint32_t> input(n);
    if (i % 10 == 8) {
      // all zeros
    } else if (i % 10 == 9) {
      for (std::size_t j = 0; j < n; ++j) input[j] = std::uint32_t(j + 1);
    } else {
      std::bernoulli_distribution keep(0.3);
      for (auto& w : input) w = keep(rng) ? rng() | 1u : 0;
    }
    std::vector<std::uint32_t> expect;
    for (std::uint32_t w : input)
      if (w != 0) expect.push_back(w);
    std::vector<std::uint32_t> got = wah::compact(sys, dev, st, input);
    if (got.size() > input.size()) {
      detail = "instance " + std::to_string(i) + ": output longer than input";
      ok = false;
    } else if (got != expect) {
      detail = "instance " + std::to_string(i) + " (n " + std::to_string(n) +
               "): filter mismatch";
      ok = false;
    }
  }
  for (const ActorHandle& a : {st.fused, st.move, st.count, st.prepare})
    sys.terminate(a);
  sys.await_idle();
  dev.await_all();
  if (ok) detail = "1000 arrays match filter(!=0)";
  return ok;
}

// --- 4: decode(encode(b)) == b ----------------------------------------

bool roundtrip_identity(std::string& detail) {
  std::mt19937 rng(31337);
  for (int i = 0; i < 10000; ++i) {
    std::size_t n = 1 + rng() % 4096;
    std::vector<bool> bits(n);
    switch (i % 4) {
      case 0:
        break;
      case 1:
        bits.assign(n, true);
        break;
      case 2: {
        std::bernoulli_distribution bit(0.5);
        for (std::size_t j = 0; j < n; ++j) bits[j] = bit(rng);
        break;
      }
      default: {
        // homogeneous runs of random length, to exercise fills
        std::size_t j = 0;
        bool v = rng() & 1;
        while (j < n) {
          std::size_t run = 1 + rng() % 200;
          for (; run > 0 && j < n; --run, ++j) bits[j] = v;
          v = !v;
        }
        break;
      }
    }
    std::vector<bool> back = wah::decode_exact(wah::encode(bits), n);
    if (back != bits) {
      detail = "bitmap " + std::to_string(i) + " (length " +
               std::to_string(n) + ") did not roundtrip";
      return false;
    }
  }
  detail = "10000 bitmaps, lengths 1-4096";
  return true;
}

// --- 5: build time grows linearly with row count ----------------------

bool build_time_linearity(ActorSystem& sys, Device& dev,
                          std::string& detail) {
  const std::array<std::size_t, 6> sizes{10000,  100000, 250000,
                                         500000, 750000, 1000000};
  std::mt19937 rng(99);
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t n : sizes) {
    std::vector<std::uint32_t> values = random_column(rng, n, 100);
    std::array<double, 3> runs{};
    for (double& r : runs) {
      auto t0 = SteadyClock::now();
      wah::WahIndex idx = wah::build_index(sys, dev, values);
      r = seconds_since(t0);
      if (idx.row_count != n) {
        detail = "build at n " + std::to_string(n) + " lost rows";
        return false;
      }
    }
    std::sort(runs.begin(), runs.end());
    xs.push_back(double(n));
    ys.push_back(runs[1]);
  }
  bench::LinearFit fit = bench::fit_line(xs, ys);
  char buf[96];
  std::snprintf(buf, sizeof buf, "R2 %.4f over n 1e4..1e6 (median of 3)",
                fit.r2);
  detail = buf;
  return fit.r2 >= 0.95;
}

// --- 6: facade overhead shows no positive trend in problem size -------

bool overhead_flat(ActorSystem& sys, Device& dev, std::string& detail) {
  const std::array<std::size_t, 3> sizes{64, 128, 256};
  std::mt19937 rng(5150);
  std::vector<double> xs;
  std::vector<double> ys;
  ActorHandle actor = bench::spawn_matmul(sys, dev);
  for (std::size_t n : sizes) {
    std::vector<float> m1 = bench::random_matrix(rng, n);
    std::vector<float> m2 = bench::random_matrix(rng, n);
    for (int run = 0; run < 30; ++run) {
      auto ta = SteadyClock::now();
      std::vector<float> via_actor = bench::request_matmul(sys, actor, m1, m2, n);
      double actor_secs = seconds_since(ta);
      auto td = SteadyClock::now();
      std::vector<float> via_device = bench::enqueue_matmul(dev, m1, m2, n);
      double device_secs = seconds_since(td);
      if (via_actor != via_device) {
        detail = "actor and device disagreed at n " + std::to_string(n);
        sys.terminate(actor);
        sys.await_idle();
        return false;
      }
      xs.push_back(double(n));
      ys.push_back(actor_secs - device_secs);
    }
  }
  sys.terminate(actor);
  sys.await_idle();
  bench::LinearFit fit = bench::fit_line(xs, ys);
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "slope 95%% CI [%.3g, %.3g] s per n, 30 runs per size",
                fit.slope_low, fit.slope_high);
  detail = buf;
  // The check is one-sided: only a confidently positive slope fails.
  return fit.slope_low <= 0.0;
}

// --- 7: matmul agrees with the triple-loop oracle ---------------------

bool matmul_correct(ActorSystem& sys, Device& dev, std::string& detail) {
  std::mt19937 rng(808);
  ActorHandle actor = bench::spawn_matmul(sys, dev);
  bool ok = true;
  for (std::size_t n : {1, 7, 33, 64, 128}) {
    std::vector<float> m1 = bench::random_matrix(rng, n);
    std::vector<float> m2 = bench::random_matrix(rng, n);
    std::vector<float> want = bench::matmul_oracle(m1, m2, n);
    std::vector<float> got = bench::request_matmul(sys, actor, m1, m2, n);
    if (got != want) {
      detail = "integer matrices at n " + std::to_string(n) + " not exact";
      ok = false;
      break;
    }
  }
  if (ok) {
    const std::size_t n = 256;
    std::uniform_real_distribution<float> unit(-1.0f, 1.0f);
    std::vector<float> m1(n * n);
    std::vector<float> m2(n * n);
    for (auto& v : m1) v = unit(rng);
    for (auto& v : m2) v = unit(rng);
    std::vector<float> want = bench::matmul_oracle(m1, m2, n);
    std::vector<float> got = bench::request_matmul(sys, actor, m1, m2, n);
    for (std::size_t i = 0; i < want.size(); ++i) {
      double denom = std::max(1e-6, double(std::fabs(want[i])));
      if (std::fabs(double(got[i]) - double(want[i])) / denom > 1e-4) {
        detail = "random matrices at n 256 off by more than 1e-4";
        ok = false;
        break;
      }
    }
  }
  sys.terminate(actor);
  sys.await_idle();
  if (ok) detail = "exact to n 128, within 1e-4 at n 256";
  return ok;
}

// --- 8: device/host split leaves the image bit-identical --------------

bool mandel_split_invariance(ActorSystem& sys, Device& dev,
                             std::string& detail) {
  auto t0 = SteadyClock::now();
  std::vector<std::uint32_t> want = bench::render_mandel(sys, dev, 480, 270,
                                                         100, 0.0);
  for (int tenth = 1; tenth <= 10; ++tenth) {
    std::vector<std::uint32_t> got =
        bench::render_mandel(sys, dev, 480, 270, 100, tenth / 10.0);
    if (got != want) {
      detail = "fraction 0." + std::to_string(tenth) +
               " changed the image";
      return false;
    }
  }
  double secs = seconds_since(t0);
  char buf[96];
  std::snprintf(buf, sizeof buf, "11 fractions bit-identical in %.1fs",
                secs);
  detail = buf;
  return secs < 60.0;
}

// --- 9: command ordering, exactly-once callbacks, actor discipline ----

bool dag_ordering(std::string& detail) {
  for (std::uint32_t seed = 1; seed <= 50; ++seed) {
    std::mt19937 rng(seed);
    Device dev(DeviceConfig{4, 256, seed});
    const int commands = 100;
    std::vector<Event> events;
    std::vector<std::vector<int>> deps_of(commands);
    std::vector<std::atomic<int>> first_fires(commands);
    std::vector<std::atomic<int>> second_fires(commands);
    std::mutex order_mu;
    std::vector<int> completion_order;

    for (int i = 0; i < commands; ++i) {
      if (i > 0) {
        int fan = int(rng() % 4);
        for (int d = 0; d < fan; ++d)
          deps_of[i].push_back(int(rng() % std::uint32_t(i)));
      }
      std::vector<Event> deps;
      for (int d : deps_of[i]) deps.push_back(events[d]);
      unsigned spin = rng() % 2000;
      KernelDef spin_kernel{"spin", [spin](ItemCtx&) {
                              volatile unsigned acc = 0;
                              for (unsigned s = 0; s < spin; ++s)
                                acc = acc + s;
                            }};
      Event e = dev.enqueue_kernel(spin_kernel, NdRange::linear(1), {},
                                   std::move(deps));
      e.add_callback([&, i](EventState) {
        first_fires[std::size_t(i)].fetch_add(1);
        std::lock_guard<std::mutex> lock(order_mu);
        completion_order.push_back(i);
      });
      events.push_back(e);
    }
    // Race late registration against completion; both paths must fire
    // the callback exactly once.
    std::thread late([&] {
      for (int i = 0; i < commands; ++i)
        events[std::size_t(i)].add_callback([&, i](EventState) {
          second_fires[std::size_t(i)].fetch_add(1);
        });
    });
    late.join();
    dev.await_all();

    std::vector<int> position(commands, -1);
    {
      std::lock_guard<std::mutex> lock(order_mu);
      for (std::size_t p = 0; p < completion_order.size(); ++p)
        position[std::size_t(completion_order[p])] = int(p);
    }
    for (int i = 0; i < commands; ++i) {
      if (first_fires[std::size_t(i)] != 1 ||
          second_fires[std::size_t(i)] != 1) {
        detail = "seed " + std::to_string(seed) + ": callback on command " +
                 std::to_string(i) + " did not fire exactly once";
        return false;
      }
      if (position[std::size_t(i)] < 0) {
        detail = "seed " + std::to_string(seed) + ": command " +
                 std::to_string(i) + " never completed";
        return false;
      }
      for (int d : deps_of[std::size_t(i)]) {
        if (position[std::size_t(d)] > position[std::size_t(i)]) {
          detail = "seed " + std::to_string(seed) + ": command " +
                   std::to_string(i) + " finished before its dependency " +
                   std::to_string(d);
          return false;
        }
      }
    }
  }
  return true;
}

bool actor_discipline(std::string& detail) {
  const int senders = 8;
  const std::int64_t per_sender = 500;
  ActorSystem sys;
  std::atomic<bool> inside{false};
  std::atomic<int> overlaps{0};
  std::atomic<int> fifo_breaks{0};
  std::atomic<std::int64_t> handled{0};
  std::array<std::int64_t, senders> last_seq{};
  last_seq.fill(-1);

  ActorHandle probe = sys.spawn(Behavior{}.on(
      {ValueKind::i64, ValueKind::i64}, [&](Context&, Message m) {
        if (inside.exchange(true)) overlaps.fetch_add(1);
        auto s = std::size_t(m.at(0).as_i64());
        std::int64_t seq = m.at(1).as_i64();
        if (seq != last_seq[s] + 1) fifo_breaks.fetch_add(1);
        last_seq[s] = seq;
        handled.fetch_add(1);
        inside.store(false);
        return HandlerResult::no_reply();
      }));

  std::vector<std::thread> threads;
  for (int s = 0; s < senders; ++s)
    threads.emplace_back([&, s] {
      for (std::int64_t q = 0; q < per_sender; ++q)
        sys.send(probe, Message::of(std::int64_t(s), q));
    });
  for (auto& t : threads) t.join();
  sys.await_idle();
  bool ok = overlaps == 0 && fifo_breaks == 0 &&
            handled == senders * per_sender;
  if (!ok)
    detail = std::to_string(overlaps.load()) + " overlapping entries, " +
             std::to_string(fifo_breaks.load()) + " FIFO breaks, " +
             std::to_string(handled.load()) + " of " +
             std::to_string(senders * per_sender) + " handled";
  sys.shutdown();
  return ok;
}

bool substrate_stress(std::string& detail) {
  if (!dag_ordering(detail)) return false;
  if (!actor_discipline(detail)) return false;
  detail = "5000 commands in order, 4000 messages serial and FIFO";
  return true;
}

}  // namespace

int main() {
  ActorSystem sys;
  Device dev;
  std::string detail;

  std::size_t baseline = dev.live_buffers();
  bool hygiene = true;
  std::string hygiene_detail = "buffer count returned to baseline each time";

  report(1, "index pipeline equals reference",
         index_equivalence(sys, dev, detail), detail);
  report(2, "composed stages equal stepwise stages",
         composition_equation(sys, dev, detail), detail);
  if (dev.live_buffers() != baseline) {
    hygiene = false;
    hygiene_detail = "after index checks: " +
                     std::to_string(dev.live_buffers()) + " live, expected " +
                     std::to_string(baseline);
  }
  report(3, "compaction equals nonzero filter",
         compaction_filter(sys, dev, detail), detail);
  report(4, "WAH roundtrip identity", roundtrip_identity(detail), detail);
  report(5, "build time linear in rows",
         build_time_linearity(sys, dev, detail), detail);
  report(6, "facade overhead flat in size", overhead_flat(sys, dev, detail),
         detail);
  report(7, "matmul matches oracle", matmul_correct(sys, dev, detail),
         detail);
  std::size_t before_mandel = dev.live_buffers();
  report(8, "mandelbrot split invariant",
         mandel_split_invariance(sys, dev, detail), detail);
  if (hygiene && dev.live_buffers() != before_mandel) {
    hygiene = false;
    hygiene_detail = "after mandelbrot: " +
                     std::to_string(dev.live_buffers()) + " live, expected " +
                     std::to_string(before_mandel);
  }
  report(9, "event and actor substrate", substrate_stress(detail), detail);
  report(10, "no buffer leaks", hygiene, hygiene_detail);

  sys.shutdown();
  if (g_failures > 0) {
    std::printf("%d of 10 checks failed\n", g_failures);
    return 1;
  }
  std::printf("all 10 checks passed\n");
  return 0;
}
