#pragma once

#include <atomic>
#include <cstring>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ndactor/buffer.hpp"
#include "ndactor/ndrange.hpp"

namespace ndactor {

/// Argument bound to a kernel at enqueue time: a device buffer, a block
/// of group-local scratch memory, or a scalar copied into each item.
struct KernelArg {
  enum class Kind : std::uint8_t { global, local, scalar };

  Kind kind = Kind::scalar;
  Buffer buffer;
  ElemType local_type = ElemType::u32;
  std::size_t local_len = 0;
  Scalar value;

  static KernelArg global(Buffer b) {
    KernelArg a;
    a.kind = Kind::global;
    a.buffer = std::move(b);
    return a;
  }
  static KernelArg local(ElemType t, std::size_t len) {
    KernelArg a;
    a.kind = Kind::local;
    a.local_type = t;
    a.local_len = len;
    return a;
  }
  static KernelArg scalar(Scalar v) {
    KernelArg a;
    a.kind = Kind::scalar;
    a.value = v;
    return a;
  }
};

namespace detail {

/// Flattened view of one bound argument, as seen from inside a group.
struct ArgView {
  std::byte* data = nullptr;
  std::size_t len = 0;
  std::size_t esize = 0;
  Scalar value;
  bool is_scalar = false;
};

struct NdInfo {
  unsigned rank = 1;
  std::array<std::size_t, 3> global{1, 1, 1};
  std::array<std::size_t, 3> offset{0, 0, 0};
  std::array<std::size_t, 3> local{1, 1, 1};
  std::array<std::size_t, 3> groups{1, 1, 1};
};

}  // namespace detail

/// Element view of a global or local kernel argument. Every access is
/// bounds checked; stepping outside fails the whole command instead of
/// stomping host memory.
template <class T>
class BufView {
public:
  BufView(T* p, std::size_t n) : p_(p), n_(n) {}

  T& operator[](std::size_t i) const {
    if (i >= n_)
      throw DeviceError("access at " + std::to_string(i) +
                        " outside buffer of " + std::to_string(n_));
    return p_[i];
  }
  std::size_t size() const { return n_; }
  T* data() const { return p_; }

private:
  T* p_;
  std::size_t n_;
};

/// The view a kernel body has of one work item. Dimension 0 varies
/// fastest in all linearizations. Private slots persist across phases
/// of the same item; local memory is shared by the item's group.
class ItemCtx {
public:
  static constexpr unsigned kPrivSlots = 4;

  ItemCtx(const detail::NdInfo* nd, std::span<detail::ArgView> args,
          std::array<std::size_t, 3> group_idx, std::uint64_t* priv)
      : nd_(nd), args_(args), group_(group_idx), priv_(priv) {}

  void set_item(std::size_t linear) { item_ = linear; }

  std::size_t local_id(unsigned d = 0) const {
    switch (d) {
      case 0: return item_ % nd_->local[0];
      case 1: return (item_ / nd_->local[0]) % nd_->local[1];
      default: return item_ / (nd_->local[0] * nd_->local[1]);
    }
  }
  std::size_t global_id(unsigned d = 0) const {
    return nd_->offset[d] + group_[d] * nd_->local[d] + local_id(d);
  }
  std::size_t group_id(unsigned d = 0) const { return group_[d]; }
  std::size_t global_size(unsigned d = 0) const { return nd_->global[d]; }
  std::size_t local_size(unsigned d = 0) const { return nd_->local[d]; }
  std::size_t num_groups(unsigned d = 0) const { return nd_->groups[d]; }
  std::size_t linear_local_id() const { return item_; }
  std::size_t linear_global_id() const {
    std::size_t x = global_id(0) - nd_->offset[0];
    std::size_t y = global_id(1) - nd_->offset[1];
    std::size_t z = global_id(2) - nd_->offset[2];
    return (z * nd_->global[1] + y) * nd_->global[0] + x;
  }
  std::size_t linear_group_id() const {
    return (group_[2] * nd_->groups[1] + group_[1]) * nd_->groups[0] +
           group_[0];
  }

  /// Element view of a buffer or local argument.
  template <class T>
  BufView<T> buf(unsigned i) const {
    const detail::ArgView& a = view(i);
    if (a.is_scalar)
      throw DeviceError("kernel argument " + std::to_string(i) +
                        " is a scalar, not a buffer");
    if (sizeof(T) != a.esize)
      throw DeviceError("kernel argument " + std::to_string(i) +
                        " has a different element width");
    return {reinterpret_cast<T*>(a.data), a.len};
  }

  template <class T>
  T scalar(unsigned i) const {
    const detail::ArgView& a = view(i);
    if (!a.is_scalar)
      throw DeviceError("kernel argument " + std::to_string(i) +
                        " is a buffer, not a scalar");
    return a.value.as<T>();
  }

  /// Per-item private slot, zero at kernel start.
  template <class T>
  T& priv(unsigned slot) const {
    static_assert(sizeof(T) <= sizeof(std::uint64_t));
    return *reinterpret_cast<T*>(&priv_[item_ * kPrivSlots + slot]);
  }

  template <class T>
  T atomic_add(BufView<T> s, std::size_t i, T v) const {
    return std::atomic_ref<T>(s[i]).fetch_add(v);
  }

private:
  const detail::ArgView& view(unsigned i) const {
    if (i >= args_.size())
      throw DeviceError("kernel argument index " + std::to_string(i) +
                        " out of range");
    return args_[i];
  }

  const detail::NdInfo* nd_;
  std::span<detail::ArgView> args_;
  std::array<std::size_t, 3> group_{0, 0, 0};
  std::uint64_t* priv_;
  std::size_t item_ = 0;
};

/// A kernel body split into phases; every item of a group finishes a
/// phase before any item of that group starts the next. That is the
/// whole barrier story: one barrier between consecutive phases.
struct KernelDef {
  std::string name;
  std::vector<std::function<void(ItemCtx&)>> phases;

  KernelDef() = default;
  KernelDef(std::string n, std::function<void(ItemCtx&)> body)
      : name(std::move(n)) {
    phases.push_back(std::move(body));
  }
  KernelDef(std::string n,
            std::vector<std::function<void(ItemCtx&)>> multi_phase)
      : name(std::move(n)), phases(std::move(multi_phase)) {}
};

}  // namespace ndactor
