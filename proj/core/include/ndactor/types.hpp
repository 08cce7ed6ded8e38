#pragma once

#include <cstdint>
#include <string>
#include <variant>

namespace ndactor {

/// Element types a device buffer can hold.
enum class ElemType : std::uint8_t { u32, i32, f32, f64 };

constexpr std::size_t elem_size(ElemType t) {
  switch (t) {
    case ElemType::u32:
    case ElemType::i32:
    case ElemType::f32: return 4;
    case ElemType::f64: return 8;
  }
  return 0;
}

constexpr const char* elem_name(ElemType t) {
  switch (t) {
    case ElemType::u32: return "u32";
    case ElemType::i32: return "i32";
    case ElemType::f32: return "f32";
    case ElemType::f64: return "f64";
  }
  return "?";
}

/// Scalar transported into kernel private memory.
class Scalar {
public:
  Scalar() : rep_(std::uint32_t{0}) {}
  Scalar(std::uint32_t v) : rep_(v) {}
  Scalar(std::int32_t v) : rep_(v) {}
  Scalar(float v) : rep_(v) {}
  Scalar(double v) : rep_(v) {}

  ElemType type() const {
    switch (rep_.index()) {
      case 0: return ElemType::u32;
      case 1: return ElemType::i32;
      case 2: return ElemType::f32;
      default: return ElemType::f64;
    }
  }

  template <class T>
  T as() const {
    return std::visit([](auto v) { return static_cast<T>(v); }, rep_);
  }

private:
  std::variant<std::uint32_t, std::int32_t, float, double> rep_;
};

/// Reasons a request can fail or an actor can refuse a message.
enum class ErrorCode : std::uint8_t {
  down,            // target terminated before replying
  unhandled,       // behavior could not pattern-match the message
  mismatch,        // compute actor: message does not fit the argument specs
  device_failure,  // compute actor: device rejected or failed the command
  released_ref,    // compute actor: a memory reference was already released
  broken_promise,  // reply obligation dropped without an answer
};

constexpr const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::down: return "down";
    case ErrorCode::unhandled: return "unhandled";
    case ErrorCode::mismatch: return "mismatch";
    case ErrorCode::device_failure: return "device-failure";
    case ErrorCode::released_ref: return "released-ref";
    case ErrorCode::broken_promise: return "broken-promise";
  }
  return "?";
}

struct ActorError {
  ErrorCode code;
  std::string what;
};

}  // namespace ndactor
