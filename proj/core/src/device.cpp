#include "ndactor/device.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace ndactor {

namespace {

struct Command {
  enum class Kind { write, read, kernel };

  Kind kind = Kind::write;
  Event event;

  std::shared_ptr<detail::BufferState> target;
  std::vector<std::byte> src;
  std::shared_ptr<std::vector<std::byte>> dst;

  KernelDef kernel;
  detail::NdInfo nd;
  std::vector<KernelArg> args;
  std::vector<detail::ArgView> base_views;
  std::vector<std::uint32_t> order;
  std::size_t total_groups = 0;
  std::size_t local_total = 1;

  std::atomic<std::size_t> next_group{0};
  std::atomic<std::size_t> remaining{0};
  std::atomic<bool> failed{false};
  std::mutex fail_mu;
  std::string fail_msg;

  std::atomic<int> unresolved{0};
  std::atomic<bool> dep_failed{false};
};

}  // namespace

struct Device::Impl {
  DeviceConfig cfg;
  Device* self = nullptr;

  std::mutex mu;
  std::condition_variable work_cv;
  std::condition_variable drain_cv;
  std::deque<std::shared_ptr<Command>> runq;
  std::vector<std::thread> workers;
  std::size_t pending = 0;
  bool stopping = false;

  std::atomic<std::uint64_t> next_buffer_id{1};
  std::atomic<std::uint64_t> cmd_seq{0};
  std::atomic<std::size_t> live{0};

  void submit(std::shared_ptr<Command> cmd, const std::vector<Event>& deps) {
    {
      std::lock_guard<std::mutex> l(mu);
      if (stopping) throw DeviceError("device is shutting down");
      ++pending;
    }
    // The extra count covers this registration loop itself, so the
    // command cannot become runnable while deps are still being wired.
    cmd->unresolved.store(static_cast<int>(deps.size()) + 1);
    for (const Event& dep : deps) {
      dep.add_callback([this, cmd](EventState st) {
        if (st == EventState::failed) cmd->dep_failed.store(true);
        if (cmd->unresolved.fetch_sub(1) == 1) schedule(cmd);
      });
    }
    if (cmd->unresolved.fetch_sub(1) == 1) schedule(cmd);
  }

  // Runs after the event's terminal transition AND its callbacks, so
  // await_all() returning means completion work has also finished.
  void command_done() {
    std::lock_guard<std::mutex> l(mu);
    --pending;
    if (pending == 0) drain_cv.notify_all();
  }

  void schedule(const std::shared_ptr<Command>& cmd) {
    if (cmd->dep_failed.load()) {
      cmd->event.fail("dependency failed");
      command_done();
      return;
    }
    std::size_t slots = 1;
    if (cmd->kind == Command::Kind::kernel)
      slots = std::min<std::size_t>(cfg.compute_units,
                                    std::max<std::size_t>(1, cmd->total_groups));
    {
      std::lock_guard<std::mutex> l(mu);
      for (std::size_t i = 0; i < slots; ++i) runq.push_back(cmd);
    }
    if (slots == 1)
      work_cv.notify_one();
    else
      work_cv.notify_all();
  }

  void worker_loop() {
    for (;;) {
      std::shared_ptr<Command> cmd;
      {
        std::unique_lock<std::mutex> l(mu);
        work_cv.wait(l, [&] { return stopping || !runq.empty(); });
        if (runq.empty()) return;
        cmd = runq.front();
        runq.pop_front();
      }
      execute(cmd);
    }
  }

  void execute(const std::shared_ptr<Command>& cmd) {
    switch (cmd->kind) {
      case Command::Kind::write:
        cmd->event.mark_exec_start();
        std::memcpy(cmd->target->bytes.data(), cmd->src.data(),
                    cmd->src.size());
        cmd->event.complete();
        command_done();
        break;
      case Command::Kind::read:
        cmd->event.mark_exec_start();
        *cmd->dst = cmd->target->bytes;
        cmd->event.complete();
        command_done();
        break;
      case Command::Kind::kernel: {
        cmd->event.mark_exec_start();
        for (;;) {
          std::size_t g = cmd->next_group.fetch_add(1);
          if (g >= cmd->total_groups) break;
          std::size_t flat = cmd->order.empty() ? g : cmd->order[g];
          try {
            run_group(*cmd, flat);
          } catch (const std::exception& e) {
            cmd->failed.store(true);
            std::lock_guard<std::mutex> l(cmd->fail_mu);
            if (cmd->fail_msg.empty()) cmd->fail_msg = e.what();
          }
          if (cmd->remaining.fetch_sub(1) == 1) {
            if (cmd->failed.load()) {
              std::string msg;
              {
                std::lock_guard<std::mutex> l(cmd->fail_mu);
                msg = cmd->fail_msg;
              }
              cmd->event.fail("kernel " + cmd->kernel.name + ": " + msg);
            } else {
              cmd->event.complete();
            }
            command_done();
          }
        }
        break;
      }
    }
  }

  void run_group(Command& cmd, std::size_t flat) {
    std::array<std::size_t, 3> gidx;
    gidx[0] = flat % cmd.nd.groups[0];
    std::size_t rest = flat / cmd.nd.groups[0];
    gidx[1] = rest % cmd.nd.groups[1];
    gidx[2] = rest / cmd.nd.groups[1];

    std::vector<detail::ArgView> views = cmd.base_views;
    std::vector<std::vector<std::byte>> locals;
    for (std::size_t i = 0; i < cmd.args.size(); ++i) {
      if (cmd.args[i].kind != KernelArg::Kind::local) continue;
      std::size_t es = elem_size(cmd.args[i].local_type);
      locals.emplace_back(cmd.args[i].local_len * es, std::byte{0});
      views[i].data = locals.back().data();
    }

    std::vector<std::uint64_t> priv(cmd.local_total * ItemCtx::kPrivSlots, 0);
    ItemCtx ctx(&cmd.nd, views, gidx, priv.data());
    for (const auto& phase : cmd.kernel.phases) {
      for (std::size_t item = 0; item < cmd.local_total; ++item) {
        ctx.set_item(item);
        phase(ctx);
      }
    }
  }

  void check_target(const Buffer& b) const {
    if (!b.valid()) throw DeviceError("invalid buffer");
    if (&b.device() != self)
      throw DeviceError("buffer belongs to a different device");
    if (b.freed()) throw DeviceError("buffer already freed");
  }

  static void check_deps(const std::vector<Event>& deps) {
    for (const Event& e : deps)
      if (!e.valid()) throw DeviceError("invalid dependency event");
  }
};

Device::Device(DeviceConfig cfg) : cfg_(cfg), impl_(new Impl) {
  if (cfg_.compute_units == 0) cfg_.compute_units = 1;
  if (cfg_.max_group_size == 0)
    throw DeviceError("group size cap must be positive");
  impl_->cfg = cfg_;
  impl_->self = this;
  impl_->workers.reserve(cfg_.compute_units);
  for (unsigned i = 0; i < cfg_.compute_units; ++i)
    impl_->workers.emplace_back([im = impl_.get()] { im->worker_loop(); });
}

Device::~Device() {
  await_all();
  {
    std::lock_guard<std::mutex> l(impl_->mu);
    impl_->stopping = true;
  }
  impl_->work_cv.notify_all();
  for (auto& w : impl_->workers) w.join();
}

Buffer Device::create_buffer(ElemType type, std::int64_t length,
                             Access access) {
  if (length < 0) throw DeviceError("buffer length is negative");
  auto st = std::make_shared<detail::BufferState>();
  st->id = impl_->next_buffer_id.fetch_add(1);
  st->type = type;
  st->length = static_cast<std::size_t>(length);
  st->access = access;
  st->device = this;
  st->bytes.assign(st->length * elem_size(type), std::byte{0});
  impl_->live.fetch_add(1);
  return Buffer(std::move(st));
}

void Device::free_buffer(const Buffer& b) {
  if (!b.valid()) throw DeviceError("invalid buffer");
  if (&b.device() != this)
    throw DeviceError("buffer belongs to a different device");
  if (b.state().freed.exchange(true, std::memory_order_acq_rel))
    throw DeviceError("buffer already freed");
  impl_->live.fetch_sub(1);
}

std::size_t Device::live_buffers() const { return impl_->live.load(); }

Event Device::enqueue_write_bytes(const Buffer& b, std::vector<std::byte> data,
                                  std::vector<Event> deps) {
  impl_->check_target(b);
  Impl::check_deps(deps);
  if (data.size() != b.state().bytes.size())
    throw DeviceError("write size does not match the buffer");
  auto cmd = std::make_shared<Command>();
  cmd->kind = Command::Kind::write;
  cmd->event = Event::create();
  cmd->target = b.shared_state();
  cmd->src = std::move(data);
  Event ev = cmd->event;
  impl_->submit(std::move(cmd), deps);
  return ev;
}

Event Device::enqueue_read_bytes(const Buffer& b,
                                 std::shared_ptr<std::vector<std::byte>> dst,
                                 std::vector<Event> deps) {
  impl_->check_target(b);
  Impl::check_deps(deps);
  if (!dst) throw DeviceError("read destination is null");
  auto cmd = std::make_shared<Command>();
  cmd->kind = Command::Kind::read;
  cmd->event = Event::create();
  cmd->target = b.shared_state();
  cmd->dst = std::move(dst);
  Event ev = cmd->event;
  impl_->submit(std::move(cmd), deps);
  return ev;
}

Event Device::enqueue_kernel(KernelDef kernel, NdRange range,
                             std::vector<KernelArg> args,
                             std::vector<Event> deps) {
  if (kernel.phases.empty()) throw DeviceError("kernel has no phases");
  Impl::check_deps(deps);
  for (const KernelArg& a : args)
    if (a.kind == KernelArg::Kind::global) impl_->check_target(a.buffer);

  auto cmd = std::make_shared<Command>();
  cmd->kind = Command::Kind::kernel;
  cmd->event = Event::create();
  cmd->kernel = std::move(kernel);

  cmd->nd.rank = range.rank;
  cmd->nd.global = range.global;
  cmd->nd.offset = range.offset;
  cmd->nd.local = resolve_local(range, cfg_.max_group_size);
  for (unsigned d = 0; d < 3; ++d)
    cmd->nd.groups[d] = range.global[d] / cmd->nd.local[d];

  cmd->local_total = cmd->nd.local[0] * cmd->nd.local[1] * cmd->nd.local[2];
  cmd->total_groups = cmd->nd.groups[0] * cmd->nd.groups[1] * cmd->nd.groups[2];
  cmd->remaining.store(cmd->total_groups);

  cmd->args = std::move(args);
  cmd->base_views.resize(cmd->args.size());
  for (std::size_t i = 0; i < cmd->args.size(); ++i) {
    const KernelArg& a = cmd->args[i];
    detail::ArgView& v = cmd->base_views[i];
    switch (a.kind) {
      case KernelArg::Kind::global:
        v.data = a.buffer.state().bytes.data();
        v.len = a.buffer.length();
        v.esize = elem_size(a.buffer.elem_type());
        break;
      case KernelArg::Kind::local:
        v.len = a.local_len;
        v.esize = elem_size(a.local_type);
        break;
      case KernelArg::Kind::scalar:
        v.value = a.value;
        v.is_scalar = true;
        break;
    }
  }

  if (cfg_.shuffle_seed != 0) {
    cmd->order.resize(cmd->total_groups);
    std::iota(cmd->order.begin(), cmd->order.end(), 0u);
    std::mt19937_64 rng(cfg_.shuffle_seed ^
                        (0x9e3779b97f4a7c15ull *
                         (impl_->cmd_seq.fetch_add(1) + 1)));
    std::shuffle(cmd->order.begin(), cmd->order.end(), rng);
  }

  Event ev = cmd->event;
  impl_->submit(std::move(cmd), deps);
  return ev;
}

void Device::await_all() {
  std::unique_lock<std::mutex> l(impl_->mu);
  impl_->drain_cv.wait(l, [&] { return impl_->pending == 0; });
}

}  // namespace ndactor
