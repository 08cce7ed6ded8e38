#include "ndactor/event.hpp"

#include <atomic>
#include <utility>

namespace ndactor {

struct Event::State {
  std::uint64_t id = 0;
  std::mutex mu;
  std::condition_variable cv;
  EventState st = EventState::pending;
  std::string error;
  std::vector<Callback> callbacks;
  Clock::time_point enqueue_tp = Clock::now();
  Clock::time_point exec_start_tp{};
  Clock::time_point terminal_tp{};
  std::atomic<bool> exec_started{false};
};

Event Event::create() {
  static std::atomic<std::uint64_t> next{1};
  Event e;
  e.state_ = std::make_shared<State>();
  e.state_->id = next.fetch_add(1);
  return e;
}

std::uint64_t Event::id() const { return state_->id; }

EventState Event::state() const {
  std::lock_guard<std::mutex> l(state_->mu);
  return state_->st;
}

std::string Event::error() const {
  std::lock_guard<std::mutex> l(state_->mu);
  return state_->error;
}

void Event::add_callback(Callback fn) const {
  EventState st;
  {
    std::lock_guard<std::mutex> l(state_->mu);
    if (state_->st == EventState::pending) {
      state_->callbacks.push_back(std::move(fn));
      return;
    }
    st = state_->st;
  }
  fn(st);
}

EventState Event::await() const {
  std::unique_lock<std::mutex> l(state_->mu);
  state_->cv.wait(l, [&] { return state_->st != EventState::pending; });
  return state_->st;
}

Clock::time_point Event::enqueue_time() const { return state_->enqueue_tp; }

Clock::time_point Event::exec_start_time() const {
  std::lock_guard<std::mutex> l(state_->mu);
  return state_->exec_start_tp;
}

Clock::time_point Event::terminal_time() const {
  std::lock_guard<std::mutex> l(state_->mu);
  return state_->terminal_tp;
}

void Event::mark_exec_start() const {
  if (state_->exec_started.exchange(true)) return;
  std::lock_guard<std::mutex> l(state_->mu);
  state_->exec_start_tp = Clock::now();
}

void Event::complete() const {
  std::vector<Callback> cbs;
  {
    std::lock_guard<std::mutex> l(state_->mu);
    if (state_->st != EventState::pending) return;
    state_->st = EventState::complete;
    state_->terminal_tp = Clock::now();
    cbs.swap(state_->callbacks);
  }
  state_->cv.notify_all();
  for (auto& cb : cbs) cb(EventState::complete);
}

void Event::fail(std::string reason) const {
  std::vector<Callback> cbs;
  {
    std::lock_guard<std::mutex> l(state_->mu);
    if (state_->st != EventState::pending) return;
    state_->st = EventState::failed;
    state_->error = std::move(reason);
    state_->terminal_tp = Clock::now();
    cbs.swap(state_->callbacks);
  }
  state_->cv.notify_all();
  for (auto& cb : cbs) cb(EventState::failed);
}

}  // namespace ndactor
