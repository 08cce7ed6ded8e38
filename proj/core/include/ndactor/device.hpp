#pragma once

#include <cstring>
#include <memory>
#include <span>
#include <vector>

#include "ndactor/event.hpp"
#include "ndactor/kernel.hpp"

namespace ndactor {

struct DeviceConfig {
  /// Worker threads; each executes one work group at a time.
  unsigned compute_units = 4;
  /// Upper bound on the product of a work group's dimensions.
  std::size_t max_group_size = 256;
  /// Nonzero: execute each kernel's groups in a seeded random order.
  /// Useful for shaking out kernels that depend on group ordering.
  std::uint64_t shuffle_seed = 0;
};

/// A compute device simulated on host threads. Commands are admitted in
/// enqueue order and execute as soon as their dependency events are
/// terminal; independent commands overlap freely across the worker pool.
class Device {
public:
  explicit Device(DeviceConfig cfg = {});
  ~Device();

  Device(const Device&) = delete;
  Device& operator=(const Device&) = delete;

  const DeviceConfig& config() const { return cfg_; }

  /// Zero-initialized buffer of `length` elements. Negative lengths are
  /// rejected here rather than exploding as a huge unsigned value.
  Buffer create_buffer(ElemType type, std::int64_t length,
                       Access access = Access::read_write);

  /// Marks the buffer freed; commands already in flight keep the storage
  /// alive, new commands on it are rejected. Freeing twice throws.
  void free_buffer(const Buffer& b);

  std::size_t live_buffers() const;

  Event enqueue_write_bytes(const Buffer& b, std::vector<std::byte> data,
                            std::vector<Event> deps = {});

  template <class T>
  Event enqueue_write(const Buffer& b, const std::vector<T>& data,
                      std::vector<Event> deps = {}) {
    std::vector<std::byte> bytes(data.size() * sizeof(T));
    std::memcpy(bytes.data(), data.data(), bytes.size());
    return enqueue_write_bytes(b, std::move(bytes), std::move(deps));
  }

  Event enqueue_kernel(KernelDef kernel, NdRange range,
                       std::vector<KernelArg> args,
                       std::vector<Event> deps = {});

  /// Copies the buffer into `dst` when the command executes.
  Event enqueue_read_bytes(const Buffer& b,
                           std::shared_ptr<std::vector<std::byte>> dst,
                           std::vector<Event> deps = {});

  /// Enqueue a read, wait for it, and return the data; throws
  /// DeviceError when the read (or a dependency) failed.
  template <class T>
  std::vector<T> read(const Buffer& b, std::vector<Event> deps = {}) {
    auto dst = std::make_shared<std::vector<std::byte>>();
    Event ev = enqueue_read_bytes(b, dst, std::move(deps));
    if (ev.await() == EventState::failed) throw DeviceError(ev.error());
    std::vector<T> out(dst->size() / sizeof(T));
    std::memcpy(out.data(), dst->data(), out.size() * sizeof(T));
    return out;
  }

  /// Blocks until every enqueued command has reached a terminal state.
  void await_all();

private:
  struct Impl;
  DeviceConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ndactor
