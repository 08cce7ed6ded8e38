#pragma once

#include <optional>

#include "ndactor/actor.hpp"
#include "ndactor/device.hpp"

namespace ndactor {

/// How an argument crosses the actor boundary: as a plain array copied
/// each way, or as a counted reference to device memory.
enum class ArgMode : std::uint8_t { value, ref };

/// Length of a facade-created buffer, computed from the inbound message
/// before any slot is consumed.
using SizeFn = std::function<std::size_t(const Message&)>;

/// Declares one kernel argument of a compute actor: where it comes
/// from, where it goes, and how it travels.
struct ArgSpec {
  enum class Role : std::uint8_t { in, out, in_out, local, priv };

  Role role = Role::in;
  ElemType type = ElemType::u32;
  ArgMode in_mode = ArgMode::value;
  ArgMode out_mode = ArgMode::value;
  std::optional<std::size_t> size;
  SizeFn size_fn;
  Scalar priv_value;

  static ArgSpec in(ElemType t, ArgMode mode = ArgMode::value) {
    ArgSpec a;
    a.role = Role::in;
    a.type = t;
    a.in_mode = mode;
    return a;
  }
  static ArgSpec in_out(ElemType t, ArgMode arrive = ArgMode::value,
                        ArgMode reply = ArgMode::value) {
    ArgSpec a;
    a.role = Role::in_out;
    a.type = t;
    a.in_mode = arrive;
    a.out_mode = reply;
    return a;
  }
  /// Without an explicit size the output covers one element per work item.
  static ArgSpec out(ElemType t, ArgMode mode = ArgMode::value) {
    ArgSpec a;
    a.role = Role::out;
    a.type = t;
    a.out_mode = mode;
    return a;
  }
  static ArgSpec out(ElemType t, std::size_t n, ArgMode mode = ArgMode::value) {
    ArgSpec a = out(t, mode);
    a.size = n;
    return a;
  }
  static ArgSpec out(ElemType t, SizeFn f, ArgMode mode = ArgMode::value) {
    ArgSpec a = out(t, mode);
    a.size_fn = std::move(f);
    return a;
  }
  static ArgSpec local(ElemType t, std::size_t n) {
    ArgSpec a;
    a.role = Role::local;
    a.type = t;
    a.size = n;
    return a;
  }
  static ArgSpec local(ElemType t, SizeFn f) {
    ArgSpec a;
    a.role = Role::local;
    a.type = t;
    a.size_fn = std::move(f);
    return a;
  }
  /// Spawn-time constant placed in each item's private memory.
  static ArgSpec priv(Scalar v) {
    ArgSpec a;
    a.role = Role::priv;
    a.type = v.type();
    a.priv_value = v;
    return a;
  }
};

struct KernelTiming {
  Clock::time_point enqueued;
  Clock::time_point exec_start;
  Clock::time_point terminal;
};

/// Inspect or rewrite the inbound message before staging. Returning a
/// message short-circuits the kernel: it becomes the reply directly.
using Preprocess = std::function<std::optional<Message>(Message&)>;
/// Rewrites the reply message after outputs are collected.
using Postprocess = std::function<Message(Message)>;

struct ComputeActorSpec {
  KernelDef kernel;
  NdRange range;
  std::vector<ArgSpec> args;
  Preprocess preprocess;
  Postprocess postprocess;
  /// Per-message override of the index space.
  std::function<NdRange(const Message&)> range_fn;
  /// Called once per kernel run after its event turns terminal.
  std::function<void(const KernelTiming&)> timing;
};

/// Actor that owns one kernel configuration. Each well-formed message
/// stages inputs, enqueues the kernel, and answers with the outputs in
/// argument order. When every reply slot travels by reference the
/// answer leaves before the kernel finishes, carrying pending events;
/// value outputs wait for the data and arrive as plain arrays.
///
/// Inputs arriving by reference are held until the command completes,
/// then dropped: a sender that kept no share of its own transfers the
/// buffer, a sender that did keeps it alive.
ActorHandle spawn_compute(ActorSystem& sys, Device& dev,
                          ComputeActorSpec spec);

}  // namespace ndactor
