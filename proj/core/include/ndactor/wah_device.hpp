#pragma once

#include <span>

#include "ndactor/compute_actor.hpp"
#include "ndactor/wah.hpp"

namespace ndactor::wah {

struct ScanResult {
  Buffer sums;
  Event done;
};

/// Exclusive prefix sum over the first `n` elements of a u32 buffer.
/// Runs block-wise on the device and recurses over the block totals.
ScanResult scan_exclusive(Device& dev, const Buffer& in, std::size_t n,
                          std::vector<Event> deps = {});

/// Stable least-significant-digit sort of (key, payload) pairs by key,
/// in place. Digits are counted per tile so every pass scatters to
/// positions that do not depend on group scheduling.
Event sort_pairs(Device& dev, const Buffer& keys, const Buffer& payloads,
                 std::size_t n, unsigned digit_bits = 16,
                 std::vector<Event> deps = {});

/// The stream compaction stages. Each is a compute actor whose reply
/// feeds the next: `prepare` interleaves two k-element arrays, `count`
/// tallies the nonzero elements of each work group, `move` scatters
/// them to their final position and writes the compacted length into
/// config[1]. `fused` is their composition; one request to it runs the
/// stages back to back with every hand-off staying on the device.
///
/// The shared protocol: config is a two-element u32 buffer travelling
/// by reference, config[0] = k on the way in, config[1] = compacted
/// length on the way out.
struct CompactionStages {
  ActorHandle prepare;
  ActorHandle count;
  ActorHandle move;
  ActorHandle fused;
};

CompactionStages spawn_compaction(ActorSystem& sys, Device& dev);

/// Order-preserving removal of zeros, run through `fused`. Host-side
/// convenience wrapper for callers holding a plain array.
std::vector<std::uint32_t> compact(ActorSystem& sys, Device& dev,
                                   const CompactionStages& stages,
                                   std::span<const std::uint32_t> input);

/// Builds the per-value bitmap index on the device: sorts (value, row)
/// pairs, folds each value's rows into literal and fill words, and
/// compacts the word stream through the fused stages. The result is
/// identical, word for word, to reference_index.
WahIndex build_index(ActorSystem& sys, Device& dev,
                     std::span<const std::uint32_t> values,
                     unsigned digit_bits = 16);

}  // namespace ndactor::wah
