#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace ndactor {

enum class EventState : std::uint8_t { pending, complete, failed };

using Clock = std::chrono::steady_clock;

/// Completion token of a device command. Transitions pending -> complete or
/// pending -> failed exactly once; callbacks fire exactly once, after the
/// terminal transition. Registering on an already terminal event fires the
/// callback immediately in the registering thread.
class Event {
public:
  using Callback = std::function<void(EventState)>;

  Event() = default;

  static Event create();

  bool valid() const { return state_ != nullptr; }
  std::uint64_t id() const;
  EventState state() const;
  bool terminal() const { return state() != EventState::pending; }
  /// Failure description; empty unless state() == failed.
  std::string error() const;

  void add_callback(Callback fn) const;
  /// Blocks until the event is terminal and returns the terminal state.
  EventState await() const;

  /// Timestamps for instrumentation. exec_* bracket the command body;
  /// terminal_time is when the state transition happened.
  Clock::time_point enqueue_time() const;
  Clock::time_point exec_start_time() const;
  Clock::time_point terminal_time() const;

  // Producer side, used by the device implementation.
  void mark_exec_start() const;
  void complete() const;
  void fail(std::string reason) const;

  bool operator==(const Event& other) const { return state_ == other.state_; }

private:
  struct State;
  std::shared_ptr<State> state_;
};

}  // namespace ndactor
