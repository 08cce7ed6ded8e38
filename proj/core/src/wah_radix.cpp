#include <algorithm>
#include <utility>

#include "ndactor/wah_device.hpp"

namespace ndactor::wah {

namespace {

// Elements per tile. One group owns one tile, so per-digit counts and
// in-tile ranks have a single writer and every pass is deterministic.
constexpr std::size_t kTile = 16384;

}  // namespace

Event sort_pairs(Device& dev, const Buffer& keys, const Buffer& payloads,
                 std::size_t n, unsigned digit_bits,
                 std::vector<Event> deps) {
  if (digit_bits != 4 && digit_bits != 8 && digit_bits != 16)
    throw DeviceError("digit width must be 4, 8, or 16 bits");
  if (n == 0) throw DeviceError("sort over an empty range");

  std::size_t group = std::min<std::size_t>(128, dev.config().max_group_size);
  std::size_t per_item = (kTile + group - 1) / group;
  std::size_t tiles = (n + kTile - 1) / kTile;
  std::uint32_t buckets = 1u << digit_bits;
  unsigned passes = 32 / digit_bits;

  Buffer alt_keys = dev.create_buffer(ElemType::u32, std::int64_t(n));
  Buffer alt_payloads = dev.create_buffer(ElemType::u32, std::int64_t(n));

  std::pair<Buffer, Buffer> cur{keys, payloads};
  std::pair<Buffer, Buffer> nxt{alt_keys, alt_payloads};
  std::vector<Event> pending = std::move(deps);

  for (unsigned pass = 0; pass < passes; ++pass) {
    std::uint32_t shift = pass * digit_bits;
    Buffer hist =
        dev.create_buffer(ElemType::u32, std::int64_t(buckets) * tiles);

    KernelDef count{
        "radix_count", [per_item, tiles, buckets](ItemCtx& it) {
          auto k = it.buf<std::uint32_t>(0);
          auto hist = it.buf<std::uint32_t>(1);
          std::uint32_t n = it.scalar<std::uint32_t>(2);
          std::uint32_t shift = it.scalar<std::uint32_t>(3);
          std::size_t t = it.group_id(0);
          for (std::size_t e = 0; e < per_item; ++e) {
            std::size_t j = it.local_id(0) * per_item + e;
            std::size_t i = t * kTile + j;
            if (j >= kTile || i >= n) break;
            std::uint32_t d = (k[i] >> shift) & (buckets - 1);
            it.atomic_add<std::uint32_t>(hist, d * tiles + t, 1);
          }
        }};

    Event counted = dev.enqueue_kernel(
        count, NdRange::linear(tiles * group, group),
        {KernelArg::global(cur.first), KernelArg::global(hist),
         KernelArg::scalar(Scalar(std::uint32_t(n))),
         KernelArg::scalar(Scalar(shift))},
        std::move(pending));

    ScanResult offsets =
        scan_exclusive(dev, hist, std::size_t(buckets) * tiles, {counted});

    KernelDef scatter{
        "radix_scatter",
        {[buckets, tiles](ItemCtx& it) {
           if (it.local_id(0) != 0) return;
           auto k = it.buf<std::uint32_t>(0);
           auto cursor = it.buf<std::uint32_t>(5);
           auto rank = it.buf<std::uint32_t>(6);
           std::uint32_t n = it.scalar<std::uint32_t>(7);
           std::uint32_t shift = it.scalar<std::uint32_t>(8);
           std::size_t t = it.group_id(0);
           for (std::size_t j = 0; j < kTile; ++j) {
             std::size_t i = t * kTile + j;
             if (i >= n) break;
             std::uint32_t d = (k[i] >> shift) & (buckets - 1);
             rank[j] = cursor[d]++;
           }
         },
         [per_item, buckets, tiles](ItemCtx& it) {
           auto k = it.buf<std::uint32_t>(0);
           auto v = it.buf<std::uint32_t>(1);
           auto ok = it.buf<std::uint32_t>(2);
           auto ov = it.buf<std::uint32_t>(3);
           auto starts = it.buf<std::uint32_t>(4);
           auto rank = it.buf<std::uint32_t>(6);
           std::uint32_t n = it.scalar<std::uint32_t>(7);
           std::uint32_t shift = it.scalar<std::uint32_t>(8);
           std::size_t t = it.group_id(0);
           for (std::size_t e = 0; e < per_item; ++e) {
             std::size_t j = it.local_id(0) * per_item + e;
             std::size_t i = t * kTile + j;
             if (j >= kTile || i >= n) break;
             std::uint32_t d = (k[i] >> shift) & (buckets - 1);
             std::size_t pos = starts[d * tiles + t] + rank[j];
             ok[pos] = k[i];
             ov[pos] = v[i];
           }
         }}};

    Event moved = dev.enqueue_kernel(
        scatter, NdRange::linear(tiles * group, group),
        {KernelArg::global(cur.first), KernelArg::global(cur.second),
         KernelArg::global(nxt.first), KernelArg::global(nxt.second),
         KernelArg::global(offsets.sums),
         KernelArg::local(ElemType::u32, buckets),
         KernelArg::local(ElemType::u32, kTile),
         KernelArg::scalar(Scalar(std::uint32_t(n))),
         KernelArg::scalar(Scalar(shift))},
        {offsets.done});

    dev.free_buffer(hist);
    dev.free_buffer(offsets.sums);
    std::swap(cur, nxt);
    pending = {moved};
  }

  // Even pass count: the sorted data ended up back in the callers'
  // buffers and the scratch pair can go.
  dev.free_buffer(alt_keys);
  dev.free_buffer(alt_payloads);
  return pending.front();
}

}  // namespace ndactor::wah
