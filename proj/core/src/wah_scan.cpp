#include <algorithm>

#include "ndactor/wah_device.hpp"

namespace ndactor::wah {

namespace {

// Elements each item loads; a group covers group_size * kElemsPerItem.
constexpr std::size_t kElemsPerItem = 4;

}  // namespace

ScanResult scan_exclusive(Device& dev, const Buffer& in, std::size_t n,
                          std::vector<Event> deps) {
  if (n == 0) throw DeviceError("scan over an empty range");
  std::size_t group = std::min<std::size_t>(256, dev.config().max_group_size);
  std::size_t block = group * kElemsPerItem;
  std::size_t blocks = (n + block - 1) / block;

  Buffer out = dev.create_buffer(ElemType::u32, std::int64_t(n));
  Buffer totals = dev.create_buffer(ElemType::u32, std::int64_t(blocks));

  KernelDef block_scan{
      "scan_block",
      {[block](ItemCtx& it) {
         auto src = it.buf<std::uint32_t>(0);
         auto loc = it.buf<std::uint32_t>(3);
         std::uint32_t n = it.scalar<std::uint32_t>(4);
         std::size_t base = it.group_id(0) * block;
         for (std::size_t e = 0; e < kElemsPerItem; ++e) {
           std::size_t j = it.local_id(0) * kElemsPerItem + e;
           loc[j] = base + j < n ? src[base + j] : 0;
         }
       },
       [block](ItemCtx& it) {
         if (it.local_id(0) != 0) return;
         auto loc = it.buf<std::uint32_t>(3);
         auto totals = it.buf<std::uint32_t>(2);
         std::uint32_t running = 0;
         for (std::size_t j = 0; j < block; ++j) {
           std::uint32_t v = loc[j];
           loc[j] = running;
           running += v;
         }
         totals[it.group_id(0)] = running;
       },
       [block](ItemCtx& it) {
         auto dst = it.buf<std::uint32_t>(1);
         auto loc = it.buf<std::uint32_t>(3);
         std::uint32_t n = it.scalar<std::uint32_t>(4);
         std::size_t base = it.group_id(0) * block;
         for (std::size_t e = 0; e < kElemsPerItem; ++e) {
           std::size_t j = it.local_id(0) * kElemsPerItem + e;
           if (base + j < n) dst[base + j] = loc[j];
         }
       }}};

  Event pass = dev.enqueue_kernel(
      block_scan, NdRange::linear(blocks * group, group),
      {KernelArg::global(in), KernelArg::global(out),
       KernelArg::global(totals), KernelArg::local(ElemType::u32, block),
       KernelArg::scalar(Scalar(std::uint32_t(n)))},
      std::move(deps));

  if (blocks == 1) {
    dev.free_buffer(totals);
    return {out, pass};
  }

  ScanResult sub = scan_exclusive(dev, totals, blocks, {pass});

  KernelDef carry{"scan_carry", [block](ItemCtx& it) {
                    auto dst = it.buf<std::uint32_t>(0);
                    auto sums = it.buf<std::uint32_t>(1);
                    std::uint32_t n = it.scalar<std::uint32_t>(2);
                    std::uint32_t add = sums[it.group_id(0)];
                    std::size_t base = it.group_id(0) * block;
                    for (std::size_t e = 0; e < kElemsPerItem; ++e) {
                      std::size_t j =
                          base + it.local_id(0) * kElemsPerItem + e;
                      if (j < n) dst[j] += add;
                    }
                  }};

  Event done = dev.enqueue_kernel(
      carry, NdRange::linear(blocks * group, group),
      {KernelArg::global(out), KernelArg::global(sub.sums),
       KernelArg::scalar(Scalar(std::uint32_t(n)))},
      {pass, sub.done});

  dev.free_buffer(totals);
  dev.free_buffer(sub.sums);
  return {out, done};
}

}  // namespace ndactor::wah
