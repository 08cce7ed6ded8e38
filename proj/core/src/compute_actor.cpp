#include "ndactor/compute_actor.hpp"

#include <atomic>

#include "ndactor/mem_ref.hpp"

namespace ndactor {

namespace {

ValueKind array_kind(ElemType t) {
  switch (t) {
    case ElemType::u32: return ValueKind::u32_array;
    case ElemType::i32: return ValueKind::i32_array;
    case ElemType::f32: return ValueKind::f32_array;
    case ElemType::f64: return ValueKind::f64_array;
  }
  return ValueKind::u32_array;
}

std::vector<std::byte> value_bytes(const Value& v) {
  const void* src = nullptr;
  std::size_t n = 0;
  switch (v.kind()) {
    case ValueKind::u32_array:
      src = v.as_u32s().data();
      n = v.as_u32s().size() * 4;
      break;
    case ValueKind::i32_array:
      src = v.as_i32s().data();
      n = v.as_i32s().size() * 4;
      break;
    case ValueKind::f32_array:
      src = v.as_f32s().data();
      n = v.as_f32s().size() * 4;
      break;
    case ValueKind::f64_array:
      src = v.as_f64s().data();
      n = v.as_f64s().size() * 8;
      break;
    default: break;
  }
  std::vector<std::byte> out(n);
  if (n) std::memcpy(out.data(), src, n);
  return out;
}

template <class T>
std::vector<T> typed_copy(const std::vector<std::byte>& bytes) {
  std::vector<T> out(bytes.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), bytes.data(), out.size() * sizeof(T));
  return out;
}

Value bytes_to_value(ElemType t, const std::vector<std::byte>& bytes) {
  switch (t) {
    case ElemType::u32: return Value(typed_copy<std::uint32_t>(bytes));
    case ElemType::i32: return Value(typed_copy<std::int32_t>(bytes));
    case ElemType::f32: return Value(typed_copy<float>(bytes));
    case ElemType::f64: return Value(typed_copy<double>(bytes));
  }
  return Value(std::vector<std::uint32_t>{});
}

struct OutSlot {
  Buffer buf;
  ArgMode mode = ArgMode::value;
  ElemType type = ElemType::u32;
  std::optional<MemRef> forward;
  std::shared_ptr<std::vector<std::byte>> sink;
};

/// Everything a command in flight needs until its reply is out.
struct Run {
  Device* dev = nullptr;
  Event ev;
  std::vector<Buffer> free_list;
  std::vector<Value> hold;
  std::vector<OutSlot> outs;
  ReplyPromise promise;
  Postprocess post;
  std::atomic<std::size_t> reads_left{0};

  void cleanup() {
    for (Buffer& b : free_list) {
      try {
        dev->free_buffer(b);
      } catch (const DeviceError&) {
      }
    }
    free_list.clear();
    hold.clear();
  }
};

void finish_deferred(const std::shared_ptr<Run>& run) {
  if (run->ev.state() == EventState::failed) {
    run->cleanup();
    run->promise.fail(
        ActorError{ErrorCode::device_failure, run->ev.error()});
    return;
  }
  std::vector<Value> slots;
  slots.reserve(run->outs.size());
  for (OutSlot& o : run->outs) {
    if (o.mode == ArgMode::ref) {
      if (o.forward) {
        o.forward->set_pending(run->ev);
        slots.emplace_back(*o.forward);
      } else {
        slots.emplace_back(MemRef(o.buf, run->ev));
      }
    } else {
      slots.emplace_back(bytes_to_value(o.type, *o.sink));
    }
  }
  run->cleanup();
  Message m{std::move(slots)};
  if (run->post) {
    try {
      m = run->post(std::move(m));
    } catch (const std::exception& e) {
      run->promise.fail(ActorError{ErrorCode::unhandled, e.what()});
      return;
    }
  }
  run->promise.deliver(std::move(m));
}

HandlerResult run_compute(Device& dev, const ComputeActorSpec& spec,
                          Context& ctx, Message msg) {
  if (spec.preprocess) {
    auto shortcut = spec.preprocess(msg);
    if (shortcut) {
      Message r = std::move(*shortcut);
      if (spec.postprocess) r = spec.postprocess(std::move(r));
      return HandlerResult::reply(std::move(r));
    }
  }

  NdRange range = spec.range_fn ? spec.range_fn(msg) : spec.range;
  const std::size_t total = range.total();

  // Output and scratch lengths come from the untouched message.
  std::vector<std::size_t> sizes(spec.args.size(), 0);
  for (std::size_t i = 0; i < spec.args.size(); ++i) {
    const ArgSpec& a = spec.args[i];
    if (a.role != ArgSpec::Role::out && a.role != ArgSpec::Role::local)
      continue;
    if (a.size)
      sizes[i] = *a.size;
    else if (a.size_fn)
      sizes[i] = a.size_fn(msg);
    else if (a.role == ArgSpec::Role::out)
      sizes[i] = total;
    else
      return HandlerResult::error(ErrorCode::mismatch,
                                  "local argument needs a size");
  }

  auto run = std::make_shared<Run>();
  run->dev = &dev;
  run->post = spec.postprocess;

  std::vector<Buffer> created;
  auto bail = [&](ErrorCode code, std::string what) {
    for (Buffer& b : created) {
      try {
        dev.free_buffer(b);
      } catch (const DeviceError&) {
      }
    }
    return HandlerResult::error(code, std::move(what));
  };

  std::vector<KernelArg> kargs;
  std::vector<Event> deps;
  std::size_t slot = 0;

  try {
    for (std::size_t i = 0; i < spec.args.size(); ++i) {
      const ArgSpec& a = spec.args[i];
      switch (a.role) {
        case ArgSpec::Role::in:
        case ArgSpec::Role::in_out: {
          if (slot >= msg.size())
            return bail(ErrorCode::mismatch, "message has too few slots");
          Value v = std::move(msg.at(slot));
          ++slot;
          Buffer buf;
          std::optional<MemRef> fwd;
          if (a.in_mode == ArgMode::ref) {
            if (v.kind() != ValueKind::mem_ref)
              return bail(ErrorCode::mismatch,
                          "slot " + std::to_string(slot - 1) +
                              " should be a memory reference");
            const MemRef& r = v.as_ref();
            if (!r.valid() || r.released())
              return bail(ErrorCode::released_ref,
                          "slot " + std::to_string(slot - 1) +
                              " was already released");
            if (r.elem_type() != a.type)
              return bail(ErrorCode::mismatch,
                          "slot " + std::to_string(slot - 1) +
                              " has element type " +
                              elem_name(r.elem_type()) + ", expected " +
                              elem_name(a.type));
            if (&r.buffer().device() != &dev)
              return bail(ErrorCode::mismatch,
                          "reference belongs to a different device");
            buf = r.buffer();
            Event p = r.pending();
            if (p.valid()) deps.push_back(p);
            if (a.role == ArgSpec::Role::in_out &&
                a.out_mode == ArgMode::ref)
              fwd = r;
          } else {
            if (v.kind() != array_kind(a.type))
              return bail(ErrorCode::mismatch,
                          "slot " + std::to_string(slot - 1) +
                              " should be a " + elem_name(a.type) +
                              " array, got " + kind_name(v.kind()));
            buf = dev.create_buffer(
                a.type, static_cast<std::int64_t>(v.array_length()));
            created.push_back(buf);
            deps.push_back(dev.enqueue_write_bytes(buf, value_bytes(v)));
          }
          kargs.push_back(KernelArg::global(buf));
          run->hold.push_back(std::move(v));
          if (a.role == ArgSpec::Role::in_out) {
            OutSlot o;
            o.buf = buf;
            o.mode = a.out_mode;
            o.type = a.type;
            o.forward = fwd;
            run->outs.push_back(std::move(o));
          }
          break;
        }
        case ArgSpec::Role::out: {
          Buffer buf =
              dev.create_buffer(a.type, static_cast<std::int64_t>(sizes[i]));
          created.push_back(buf);
          kargs.push_back(KernelArg::global(buf));
          OutSlot o;
          o.buf = buf;
          o.mode = a.out_mode;
          o.type = a.type;
          run->outs.push_back(std::move(o));
          break;
        }
        case ArgSpec::Role::local:
          kargs.push_back(KernelArg::local(a.type, sizes[i]));
          break;
        case ArgSpec::Role::priv:
          kargs.push_back(KernelArg::scalar(a.priv_value));
          break;
      }
    }
  } catch (const DeviceError& e) {
    return bail(ErrorCode::device_failure, e.what());
  }
  if (slot != msg.size())
    return bail(ErrorCode::mismatch, "message has more slots than arguments");

  Event ev;
  try {
    ev = dev.enqueue_kernel(spec.kernel, range, std::move(kargs),
                            std::move(deps));
  } catch (const DeviceError& e) {
    return bail(ErrorCode::device_failure, e.what());
  }
  run->ev = ev;

  // Facade-created buffers are dropped once they are done serving: value
  // outputs after read-back, value inputs after the kernel. A created
  // buffer promoted into a reply reference is the recipient's now.
  for (Buffer& b : created) {
    bool handed_over = false;
    for (const OutSlot& o : run->outs)
      if (o.mode == ArgMode::ref && !o.forward && o.buf == b)
        handed_over = true;
    if (!handed_over) run->free_list.push_back(b);
  }

  if (spec.timing) {
    auto hook = spec.timing;
    ev.add_callback([ev, hook](EventState) {
      hook({ev.enqueue_time(), ev.exec_start_time(), ev.terminal_time()});
    });
  }

  bool deferred = false;
  for (const OutSlot& o : run->outs)
    if (o.mode == ArgMode::value) deferred = true;

  if (!deferred) {
    // Every reply slot is a reference: answer now, let the events carry
    // the rest.
    std::vector<Value> slots;
    slots.reserve(run->outs.size());
    for (OutSlot& o : run->outs) {
      if (o.forward) {
        o.forward->set_pending(ev);
        slots.emplace_back(*o.forward);
      } else {
        slots.emplace_back(MemRef(o.buf, ev));
      }
    }
    ev.add_callback([run](EventState) { run->cleanup(); });
    Message m{std::move(slots)};
    if (spec.postprocess) m = spec.postprocess(std::move(m));
    return HandlerResult::reply(std::move(m));
  }

  run->promise = ctx.take_promise();
  std::size_t nreads = 0;
  for (const OutSlot& o : run->outs)
    if (o.mode == ArgMode::value) ++nreads;
  run->reads_left.store(nreads);
  for (OutSlot& o : run->outs) {
    if (o.mode != ArgMode::value) continue;
    o.sink = std::make_shared<std::vector<std::byte>>();
    Event re = dev.enqueue_read_bytes(o.buf, o.sink, {ev});
    re.add_callback([run](EventState) {
      if (run->reads_left.fetch_sub(1) == 1) finish_deferred(run);
    });
  }
  return HandlerResult::no_reply();
}

}  // namespace

ActorHandle spawn_compute(ActorSystem& sys, Device& dev,
                          ComputeActorSpec spec) {
  auto sp = std::make_shared<const ComputeActorSpec>(std::move(spec));
  Device* dp = &dev;
  Behavior b;
  b.otherwise([dp, sp](Context& ctx, Message msg) -> HandlerResult {
    return run_compute(*dp, *sp, ctx, std::move(msg));
  });
  return sys.spawn(std::move(b));
}

}  // namespace ndactor
