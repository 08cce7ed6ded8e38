#include <algorithm>

#include "ndactor/wah_device.hpp"

namespace ndactor::wah {

namespace {

// Elements per count/move work group. Tiling keeps the serial prefix
// over the group counts short enough to stay linear overall.
constexpr std::size_t kStageTile = 4096;

std::size_t ref_len(const Message& m, std::size_t slot) {
  if (slot >= m.size() || m.at(slot).kind() != ValueKind::mem_ref) return 0;
  return std::size_t(m.at(slot).as_ref().length());
}

NdRange padded_linear(std::size_t n, std::size_t group) {
  std::size_t groups = (std::max<std::size_t>(n, 1) + group - 1) / group;
  return NdRange::linear(groups * group, group);
}

std::size_t stage_groups(std::size_t n) {
  return (std::max<std::size_t>(n, 1) + kStageTile - 1) / kStageTile;
}

}  // namespace

CompactionStages spawn_compaction(ActorSystem& sys, Device& dev) {
  std::size_t group = std::min<std::size_t>(128, dev.config().max_group_size);
  std::size_t per_item = (kStageTile + group - 1) / group;

  // prepare: (config, a, b) -> (config, a0..a(k-1) b0..b(k-1))
  // interleaved as out[2i] = a[i], out[2i+1] = b[i].
  ComputeActorSpec prepare;
  prepare.kernel = KernelDef{"compact_prepare", [](ItemCtx& it) {
                               auto cfg = it.buf<std::uint32_t>(0);
                               auto a = it.buf<std::uint32_t>(1);
                               auto b = it.buf<std::uint32_t>(2);
                               auto out = it.buf<std::uint32_t>(3);
                               std::size_t i = it.global_id(0);
                               if (i >= a.size()) return;
                               out[2 * i] = a[i];
                               out[2 * i + 1] = b[i];
                               if (i == 0) cfg[1] = std::uint32_t(2 * a.size());
                             }};
  prepare.args = {
      ArgSpec::in_out(ElemType::u32, ArgMode::ref, ArgMode::ref),
      ArgSpec::in(ElemType::u32, ArgMode::ref),
      ArgSpec::in(ElemType::u32, ArgMode::ref),
      ArgSpec::out(
          ElemType::u32,
          SizeFn{[](const Message& m) { return 2 * ref_len(m, 1); }},
          ArgMode::ref)};
  prepare.range_fn = [group](const Message& m) {
    return padded_linear(ref_len(m, 1), group);
  };

  // count: (config, data) -> (config, data, per-tile nonzero counts)
  ComputeActorSpec count;
  count.kernel = KernelDef{
      "compact_count",
      {[per_item](ItemCtx& it) {
         auto data = it.buf<std::uint32_t>(1);
         auto part = it.buf<std::uint32_t>(3);
         std::size_t base =
             it.group_id(0) * kStageTile + it.local_id(0) * per_item;
         std::uint32_t c = 0;
         for (std::size_t e = 0; e < per_item; ++e)
           if (base + e < data.size() && data[base + e] != 0) ++c;
         part[it.local_id(0)] = c;
       },
       [](ItemCtx& it) {
         if (it.local_id(0) != 0) return;
         auto counts = it.buf<std::uint32_t>(2);
         auto part = it.buf<std::uint32_t>(3);
         std::uint32_t total = 0;
         for (std::size_t l = 0; l < it.local_size(0); ++l) total += part[l];
         counts[it.group_id(0)] = total;
       }}};
  count.args = {
      ArgSpec::in_out(ElemType::u32, ArgMode::ref, ArgMode::ref),
      ArgSpec::in_out(ElemType::u32, ArgMode::ref, ArgMode::ref),
      ArgSpec::out(
          ElemType::u32,
          SizeFn{[](const Message& m) { return stage_groups(ref_len(m, 1)); }},
          ArgMode::ref),
      ArgSpec::local(ElemType::u32, group)};
  count.range_fn = [group](const Message& m) {
    return NdRange::linear(stage_groups(ref_len(m, 1)) * group, group);
  };

  // move: (config, data, counts) -> (config, compacted data). Tile
  // bases come from the earlier tiles' counts; the total lands in
  // config[1]. Chunk ranks keep the scatter order-preserving.
  ComputeActorSpec move;
  move.kernel = KernelDef{
      "compact_move",
      {[per_item](ItemCtx& it) {
         auto data = it.buf<std::uint32_t>(1);
         auto part = it.buf<std::uint32_t>(4);
         std::size_t base =
             it.group_id(0) * kStageTile + it.local_id(0) * per_item;
         std::uint32_t c = 0;
         for (std::size_t e = 0; e < per_item; ++e)
           if (base + e < data.size() && data[base + e] != 0) ++c;
         part[it.local_id(0)] = c;
       },
       [](ItemCtx& it) {
         if (it.local_id(0) != 0) return;
         auto cfg = it.buf<std::uint32_t>(0);
         auto counts = it.buf<std::uint32_t>(2);
         auto part = it.buf<std::uint32_t>(4);
         auto tile_base = it.buf<std::uint32_t>(5);
         std::size_t g = it.group_id(0);
         std::uint32_t base = 0;
         for (std::size_t t = 0; t < g; ++t) base += counts[t];
         tile_base[0] = base;
         if (g == 0) {
           std::uint32_t total = 0;
           for (std::size_t t = 0; t < counts.size(); ++t)
             total += counts[t];
           cfg[1] = total;
         }
         std::uint32_t running = 0;
         for (std::size_t l = 0; l < it.local_size(0); ++l) {
           std::uint32_t c = part[l];
           part[l] = running;
           running += c;
         }
       },
       [per_item](ItemCtx& it) {
         auto data = it.buf<std::uint32_t>(1);
         auto out = it.buf<std::uint32_t>(3);
         auto part = it.buf<std::uint32_t>(4);
         auto tile_base = it.buf<std::uint32_t>(5);
         std::size_t base =
             it.group_id(0) * kStageTile + it.local_id(0) * per_item;
         std::uint32_t pos = tile_base[0] + part[it.local_id(0)];
         for (std::size_t e = 0; e < per_item; ++e)
           if (base + e < data.size() && data[base + e] != 0)
             out[pos++] = data[base + e];
       }}};
  move.args = {
      ArgSpec::in_out(ElemType::u32, ArgMode::ref, ArgMode::ref),
      ArgSpec::in(ElemType::u32, ArgMode::ref),
      ArgSpec::in(ElemType::u32, ArgMode::ref),
      ArgSpec::out(
          ElemType::u32,
          SizeFn{[](const Message& m) { return ref_len(m, 1); }},
          ArgMode::ref),
      ArgSpec::local(ElemType::u32, group),
      ArgSpec::local(ElemType::u32, 1)};
  move.range_fn = [group](const Message& m) {
    return NdRange::linear(stage_groups(ref_len(m, 1)) * group, group);
  };

  CompactionStages st;
  st.prepare = spawn_compute(sys, dev, std::move(prepare));
  st.count = spawn_compute(sys, dev, std::move(count));
  st.move = spawn_compute(sys, dev, std::move(move));
  st.fused = sys.compose(st.move, sys.compose(st.count, st.prepare));
  return st;
}

std::vector<std::uint32_t> compact(ActorSystem& sys, Device& dev,
                                   const CompactionStages& stages,
                                   std::span<const std::uint32_t> input) {
  if (input.empty()) return {};
  // prepare reassembles the stream as a0 b0 a1 b1 ..., so feed it the
  // even and odd positions; an odd tail pads with one dropped zero.
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

  Reply r = sys.request(stages.fused,
                        Message::of(MemRef(cfg, wc), MemRef(ab, wa),
                                    MemRef(bb, wb)))
                .await();
  if (is_error(r))
    throw DeviceError("compaction failed: " + get_error(r).what);
  const Message& m = get_message(r);
  MemRef cfg_back = m.at(0).as_ref();
  MemRef packed = m.at(1).as_ref();
  std::uint32_t total = retrieve_u32(cfg_back)[1];
  std::vector<std::uint32_t> words = retrieve_u32(packed);
  release(cfg_back);
  release(packed);
  words.resize(total);
  return words;
}

}  // namespace ndactor::wah
