#include "ndactor/mem_ref.hpp"

#include "ndactor/device.hpp"

namespace ndactor {

struct MemRef::Control {
  Buffer buffer;
  std::atomic<int> live{0};
  mutable std::mutex ev_mu;
  Event pending;
};

struct MemRef::Unit {
  std::shared_ptr<Control> ctrl;
  std::atomic<bool> released{false};

  explicit Unit(std::shared_ptr<Control> c) : ctrl(std::move(c)) {
    ctrl->live.fetch_add(1);
  }

  void release_unit() {
    if (released.exchange(true))
      throw DeviceError("reference already released");
    drop();
  }

  void drop() {
    if (ctrl->live.fetch_sub(1) == 1)
      ctrl->buffer.device().free_buffer(ctrl->buffer);
  }

  ~Unit() {
    if (released.exchange(true)) return;
    try {
      drop();
    } catch (...) {
      // Freed out from under us; nothing sensible left to do.
    }
  }
};

MemRef::MemRef(Buffer buffer, Event pending) {
  auto ctrl = std::make_shared<Control>();
  ctrl->buffer = std::move(buffer);
  ctrl->pending = std::move(pending);
  unit_ = std::make_shared<Unit>(std::move(ctrl));
}

ElemType MemRef::elem_type() const { return unit_->ctrl->buffer.elem_type(); }

std::size_t MemRef::length() const { return unit_->ctrl->buffer.length(); }

Access MemRef::access() const { return unit_->ctrl->buffer.access(); }

Buffer MemRef::buffer() const { return unit_->ctrl->buffer; }

bool MemRef::released() const {
  return !unit_ || unit_->released.load();
}

Event MemRef::pending() const {
  std::lock_guard<std::mutex> l(unit_->ctrl->ev_mu);
  return unit_->ctrl->pending;
}

void MemRef::set_pending(Event ev) const {
  std::lock_guard<std::mutex> l(unit_->ctrl->ev_mu);
  unit_->ctrl->pending = std::move(ev);
}

MemRef MemRef::share() const {
  if (!unit_ || unit_->released.load())
    throw DeviceError("reference already released");
  MemRef r;
  r.unit_ = std::make_shared<Unit>(unit_->ctrl);
  return r;
}

void MemRef::release() const {
  if (!unit_) throw DeviceError("invalid reference");
  unit_->release_unit();
}

int MemRef::use_count() const {
  return unit_ ? unit_->ctrl->live.load() : 0;
}

namespace {

template <class T>
std::vector<T> retrieve_impl(const MemRef& ref) {
  if (ref.released()) throw DeviceError("reference already released");
  std::vector<Event> deps;
  Event ev = ref.pending();
  if (ev.valid()) deps.push_back(ev);
  return ref.buffer().device().read<T>(ref.buffer(), std::move(deps));
}

}  // namespace

std::vector<std::uint32_t> retrieve_u32(const MemRef& ref) {
  return retrieve_impl<std::uint32_t>(ref);
}
std::vector<std::int32_t> retrieve_i32(const MemRef& ref) {
  return retrieve_impl<std::int32_t>(ref);
}
std::vector<float> retrieve_f32(const MemRef& ref) {
  return retrieve_impl<float>(ref);
}
std::vector<double> retrieve_f64(const MemRef& ref) {
  return retrieve_impl<double>(ref);
}

void release(const MemRef& ref) { ref.release(); }

}  // namespace ndactor
