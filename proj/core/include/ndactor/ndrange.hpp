#pragma once

#include <array>
#include <cstddef>

#include "ndactor/buffer.hpp"

namespace ndactor {

/// Index space a kernel runs over: up to three dimensions of global work
/// items, an optional global offset, and optional work-group dimensions.
/// Work-group dimensions must divide the global dimensions exactly; when
/// absent the device picks the largest dividing group that fits its cap.
struct NdRange {
  unsigned rank = 1;
  std::array<std::size_t, 3> global{1, 1, 1};
  std::array<std::size_t, 3> offset{0, 0, 0};
  std::array<std::size_t, 3> local{0, 0, 0};
  bool has_local = false;

  static NdRange linear(std::size_t n) {
    NdRange r;
    r.rank = 1;
    r.global = {n, 1, 1};
    return r;
  }

  static NdRange linear(std::size_t n, std::size_t group) {
    NdRange r = linear(n);
    r.local = {group, 1, 1};
    r.has_local = true;
    return r;
  }

  static NdRange grid2(std::size_t x, std::size_t y) {
    NdRange r;
    r.rank = 2;
    r.global = {x, y, 1};
    return r;
  }

  static NdRange grid2(std::size_t x, std::size_t y, std::size_t lx,
                       std::size_t ly) {
    NdRange r = grid2(x, y);
    r.local = {lx, ly, 1};
    r.has_local = true;
    return r;
  }

  static NdRange grid3(std::size_t x, std::size_t y, std::size_t z) {
    NdRange r;
    r.rank = 3;
    r.global = {x, y, z};
    return r;
  }

  static NdRange grid3(std::size_t x, std::size_t y, std::size_t z,
                       std::size_t lx, std::size_t ly, std::size_t lz) {
    NdRange r = grid3(x, y, z);
    r.local = {lx, ly, lz};
    r.has_local = true;
    return r;
  }

  NdRange& with_offset(std::size_t ox, std::size_t oy = 0,
                       std::size_t oz = 0) {
    offset = {ox, oy, oz};
    return *this;
  }

  std::size_t total() const { return global[0] * global[1] * global[2]; }
};

/// Work-group dimensions for a range under a device's group-size cap
/// (the cap bounds the product of the dimensions). Explicit dimensions
/// are validated; absent ones are chosen per dimension as the largest
/// divisor of the global size that still fits under the remaining cap.
/// Throws DeviceError when the range or the requested group is invalid.
std::array<std::size_t, 3> resolve_local(const NdRange& range,
                                         std::size_t max_group);

}  // namespace ndactor
