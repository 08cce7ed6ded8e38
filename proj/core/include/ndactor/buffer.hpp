#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "ndactor/types.hpp"

namespace ndactor {

class Device;

enum class Access : std::uint8_t { read_only, write_only, read_write };

constexpr bool readable(Access a) { return a != Access::write_only; }
constexpr bool writable(Access a) { return a != Access::read_only; }

struct DeviceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct BufferState {
  std::uint64_t id = 0;
  ElemType type = ElemType::u32;
  std::size_t length = 0;
  Access access = Access::read_write;
  std::atomic<bool> freed{false};
  Device* device = nullptr;
  std::vector<std::byte> bytes;  // length * elem_size(type), zero-initialized

  template <class T>
  T* data() {
    return reinterpret_cast<T*>(bytes.data());
  }
};

}  // namespace detail

/// Handle to a device-resident buffer. Copies alias the same storage.
/// The handle keeps the storage alive; `freed` gates new commands only.
class Buffer {
public:
  Buffer() = default;
  explicit Buffer(std::shared_ptr<detail::BufferState> s) : state_(std::move(s)) {}

  bool valid() const { return state_ != nullptr; }
  std::uint64_t id() const { return state_->id; }
  ElemType elem_type() const { return state_->type; }
  std::size_t length() const { return state_->length; }
  Access access() const { return state_->access; }
  bool freed() const { return state_->freed.load(std::memory_order_acquire); }
  Device& device() const { return *state_->device; }

  detail::BufferState& state() const { return *state_; }
  const std::shared_ptr<detail::BufferState>& shared_state() const { return state_; }

  bool operator==(const Buffer& o) const { return state_ == o.state_; }

private:
  std::shared_ptr<detail::BufferState> state_;
};

}  // namespace ndactor
