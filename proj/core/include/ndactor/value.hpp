#pragma once

#include <any>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ndactor/mem_ref.hpp"
#include "ndactor/types.hpp"

namespace ndactor {

enum class ValueKind {
  i64,
  f64,
  u32_array,
  i32_array,
  f32_array,
  f64_array,
  mem_ref,
  opaque,
};

const char* kind_name(ValueKind k);

/// One slot of a message. Integers widen to i64, floating point to f64;
/// arrays keep their element type. `opaque` carries arbitrary host data
/// that matches handlers by the contained std::any type.
class Value {
public:
  Value() : v_(std::int64_t{0}) {}
  Value(std::int64_t v) : v_(v) {}
  Value(int v) : v_(std::int64_t{v}) {}
  Value(unsigned v) : v_(std::int64_t{v}) {}
  Value(double v) : v_(v) {}
  Value(std::vector<std::uint32_t> v) : v_(std::move(v)) {}
  Value(std::vector<std::int32_t> v) : v_(std::move(v)) {}
  Value(std::vector<float> v) : v_(std::move(v)) {}
  Value(std::vector<double> v) : v_(std::move(v)) {}
  Value(MemRef v) : v_(std::move(v)) {}

  static Value opaque(std::any payload) {
    Value v;
    v.v_ = std::move(payload);
    return v;
  }

  ValueKind kind() const { return static_cast<ValueKind>(v_.index()); }
  bool is_array() const {
    auto k = kind();
    return k == ValueKind::u32_array || k == ValueKind::i32_array ||
           k == ValueKind::f32_array || k == ValueKind::f64_array;
  }

  std::int64_t as_i64() const { return std::get<std::int64_t>(v_); }
  double as_f64() const { return std::get<double>(v_); }
  const std::vector<std::uint32_t>& as_u32s() const {
    return std::get<std::vector<std::uint32_t>>(v_);
  }
  const std::vector<std::int32_t>& as_i32s() const {
    return std::get<std::vector<std::int32_t>>(v_);
  }
  const std::vector<float>& as_f32s() const {
    return std::get<std::vector<float>>(v_);
  }
  const std::vector<double>& as_f64s() const {
    return std::get<std::vector<double>>(v_);
  }
  const MemRef& as_ref() const { return std::get<MemRef>(v_); }
  const std::any& as_opaque() const { return std::get<std::any>(v_); }

  std::vector<std::uint32_t> take_u32s() {
    return std::move(std::get<std::vector<std::uint32_t>>(v_));
  }
  std::vector<std::int32_t> take_i32s() {
    return std::move(std::get<std::vector<std::int32_t>>(v_));
  }
  std::vector<float> take_f32s() {
    return std::move(std::get<std::vector<float>>(v_));
  }
  std::vector<double> take_f64s() {
    return std::move(std::get<std::vector<double>>(v_));
  }

  std::size_t array_length() const;

private:
  std::variant<std::int64_t, double, std::vector<std::uint32_t>,
               std::vector<std::int32_t>, std::vector<float>,
               std::vector<double>, MemRef, std::any>
      v_;
};

/// Ordered tuple of values. Handlers match on the kind signature.
class Message {
public:
  Message() = default;
  explicit Message(std::vector<Value> slots) : slots_(std::move(slots)) {}

  template <typename... Ts>
  static Message of(Ts&&... vs) {
    std::vector<Value> slots;
    slots.reserve(sizeof...(Ts));
    (slots.emplace_back(std::forward<Ts>(vs)), ...);
    return Message(std::move(slots));
  }

  std::size_t size() const { return slots_.size(); }
  bool empty() const { return slots_.empty(); }
  const Value& at(std::size_t i) const { return slots_.at(i); }
  Value& at(std::size_t i) { return slots_.at(i); }

  bool matches(std::span<const ValueKind> sig) const {
    if (slots_.size() != sig.size()) return false;
    for (std::size_t i = 0; i < sig.size(); ++i)
      if (slots_[i].kind() != sig[i]) return false;
    return true;
  }

  auto begin() const { return slots_.begin(); }
  auto end() const { return slots_.end(); }

private:
  std::vector<Value> slots_;
};

template <typename... Ts>
Message make_message(Ts&&... vs) {
  return Message::of(std::forward<Ts>(vs)...);
}

struct SerializationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat byte encoding of a message for transport. Device references are
/// node-local, so serializing a message that carries one throws.
std::vector<std::byte> serialize_message(const Message& msg);
Message deserialize_message(std::span<const std::byte> bytes);

}  // namespace ndactor
