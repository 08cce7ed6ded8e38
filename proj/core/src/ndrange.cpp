#include "ndactor/ndrange.hpp"

#include <string>

namespace ndactor {

std::array<std::size_t, 3> resolve_local(const NdRange& range,
                                         std::size_t max_group) {
  if (range.rank < 1 || range.rank > 3)
    throw DeviceError("range rank must be 1, 2 or 3");
  if (max_group == 0) throw DeviceError("group size cap must be positive");
  for (unsigned d = 0; d < 3; ++d) {
    if (d < range.rank && range.global[d] == 0)
      throw DeviceError("global dimension " + std::to_string(d) + " is empty");
    if (d >= range.rank && range.global[d] != 1)
      throw DeviceError("trailing global dimensions must be 1");
  }

  if (range.has_local) {
    std::array<std::size_t, 3> out{1, 1, 1};
    std::size_t product = 1;
    for (unsigned d = 0; d < 3; ++d) {
      std::size_t l = d < range.rank ? range.local[d] : 1;
      if (l == 0)
        throw DeviceError("work-group dimension " + std::to_string(d) +
                          " is zero");
      if (range.global[d] % l != 0)
        throw DeviceError("work-group dimension " + std::to_string(d) +
                          " does not divide the global range");
      out[d] = l;
      product *= l;
    }
    if (product > max_group)
      throw DeviceError("work-group of " + std::to_string(product) +
                        " items exceeds the device cap of " +
                        std::to_string(max_group));
    return out;
  }

  // No group requested: take, dimension by dimension, the largest divisor
  // of the global size that still fits under what is left of the cap.
  std::array<std::size_t, 3> out{1, 1, 1};
  std::size_t cap = max_group;
  for (unsigned d = 0; d < range.rank; ++d) {
    std::size_t limit = std::min(cap, range.global[d]);
    std::size_t best = 1;
    for (std::size_t c = limit; c >= 1; --c) {
      if (range.global[d] % c == 0) {
        best = c;
        break;
      }
    }
    out[d] = best;
    cap /= best;
  }
  return out;
}

}  // namespace ndactor
