#pragma once

#include <atomic>
#include <memory>
#include <mutex>

#include "ndactor/buffer.hpp"
#include "ndactor/event.hpp"

namespace ndactor {

/// Typed reference to a device-resident buffer with an optional pending
/// event. Handles are reference counted: `share()` creates a new counted
/// handle, `release()` gives one up, and the buffer is freed when the last
/// handle is released. Copying a MemRef value aliases the same handle.
///
/// Handles that go out of scope unreleased release themselves, so dropping
/// a reference from a message frees its share of the buffer.
class MemRef {
public:
  MemRef() = default;
  MemRef(Buffer buffer, Event pending);

  bool valid() const { return unit_ != nullptr; }
  ElemType elem_type() const;
  std::size_t length() const;
  Access access() const;
  Buffer buffer() const;
  bool released() const;

  /// Event the buffer contents depend on; invalid Event if none pending.
  Event pending() const;
  /// Replace the pending event (a new command now produces the contents).
  void set_pending(Event ev) const;

  /// New counted handle to the same buffer.
  MemRef share() const;

  /// Give this handle up; frees the buffer when it was the last one.
  /// Releasing an already released handle is an error.
  void release() const;

  /// Number of live handles (diagnostic).
  int use_count() const;

private:
  struct Control;
  struct Unit;
  std::shared_ptr<Unit> unit_;
};

/// Waits for the pending event, then reads the buffer. Errors on released
/// handles and failed pending events.
std::vector<std::uint32_t> retrieve_u32(const MemRef& ref);
std::vector<std::int32_t> retrieve_i32(const MemRef& ref);
std::vector<float> retrieve_f32(const MemRef& ref);
std::vector<double> retrieve_f64(const MemRef& ref);

void release(const MemRef& ref);

}  // namespace ndactor
