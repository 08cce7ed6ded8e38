#include "ndactor/value.hpp"

#include <bit>
#include <cstring>

namespace ndactor {

const char* kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::i64: return "i64";
    case ValueKind::f64: return "f64";
    case ValueKind::u32_array: return "u32[]";
    case ValueKind::i32_array: return "i32[]";
    case ValueKind::f32_array: return "f32[]";
    case ValueKind::f64_array: return "f64[]";
    case ValueKind::mem_ref: return "mem-ref";
    case ValueKind::opaque: return "opaque";
  }
  return "?";
}

std::size_t Value::array_length() const {
  switch (kind()) {
    case ValueKind::u32_array: return as_u32s().size();
    case ValueKind::i32_array: return as_i32s().size();
    case ValueKind::f32_array: return as_f32s().size();
    case ValueKind::f64_array: return as_f64s().size();
    default: return 0;
  }
}

namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(std::byte((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(std::byte((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::span<const std::byte> in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw SerializationError("truncated message");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= std::uint32_t(std::to_integer<std::uint8_t>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

std::uint64_t get_u64(std::span<const std::byte> in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw SerializationError("truncated message");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= std::uint64_t(std::to_integer<std::uint8_t>(in[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

template <typename T>
void put_array(std::vector<std::byte>& out, const std::vector<T>& xs) {
  put_u64(out, xs.size());
  for (T x : xs) {
    if constexpr (sizeof(T) == 4)
      put_u32(out, std::bit_cast<std::uint32_t>(x));
    else
      put_u64(out, std::bit_cast<std::uint64_t>(x));
  }
}

template <typename T>
std::vector<T> get_array(std::span<const std::byte> in, std::size_t& pos) {
  std::uint64_t n = get_u64(in, pos);
  std::vector<T> xs;
  xs.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    if constexpr (sizeof(T) == 4)
      xs.push_back(std::bit_cast<T>(get_u32(in, pos)));
    else
      xs.push_back(std::bit_cast<T>(get_u64(in, pos)));
  }
  return xs;
}

}  // namespace

std::vector<std::byte> serialize_message(const Message& msg) {
  std::vector<std::byte> out;
  put_u32(out, static_cast<std::uint32_t>(msg.size()));
  for (const Value& v : msg) {
    switch (v.kind()) {
      case ValueKind::mem_ref:
        throw SerializationError(
            "device references are node-local and cannot be serialized");
      case ValueKind::opaque:
        throw SerializationError("opaque values cannot be serialized");
      default:
        break;
    }
    out.push_back(std::byte(static_cast<std::uint8_t>(v.kind())));
    switch (v.kind()) {
      case ValueKind::i64:
        put_u64(out, std::bit_cast<std::uint64_t>(v.as_i64()));
        break;
      case ValueKind::f64:
        put_u64(out, std::bit_cast<std::uint64_t>(v.as_f64()));
        break;
      case ValueKind::u32_array: put_array(out, v.as_u32s()); break;
      case ValueKind::i32_array: put_array(out, v.as_i32s()); break;
      case ValueKind::f32_array: put_array(out, v.as_f32s()); break;
      case ValueKind::f64_array: put_array(out, v.as_f64s()); break;
      default: break;
    }
  }
  return out;
}

Message deserialize_message(std::span<const std::byte> bytes) {
  std::size_t pos = 0;
  std::uint32_t count = get_u32(bytes, pos);
  std::vector<Value> slots;
  slots.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    if (pos >= bytes.size()) throw SerializationError("truncated message");
    auto kind = static_cast<ValueKind>(bytes[pos]);
    ++pos;
    switch (kind) {
      case ValueKind::i64:
        slots.emplace_back(std::bit_cast<std::int64_t>(get_u64(bytes, pos)));
        break;
      case ValueKind::f64:
        slots.emplace_back(std::bit_cast<double>(get_u64(bytes, pos)));
        break;
      case ValueKind::u32_array:
        slots.emplace_back(get_array<std::uint32_t>(bytes, pos));
        break;
      case ValueKind::i32_array:
        slots.emplace_back(get_array<std::int32_t>(bytes, pos));
        break;
      case ValueKind::f32_array:
        slots.emplace_back(get_array<float>(bytes, pos));
        break;
      case ValueKind::f64_array:
        slots.emplace_back(get_array<double>(bytes, pos));
        break;
      default:
        throw SerializationError("unknown value tag");
    }
  }
  if (pos != bytes.size()) throw SerializationError("trailing bytes");
  return Message(std::move(slots));
}

}  // namespace ndactor
