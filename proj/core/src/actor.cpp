#include "ndactor/actor.hpp"

#include <atomic>
#include <sstream>

namespace ndactor {

namespace detail {

struct ResponseState {
  std::mutex mu;
  std::condition_variable cv;
  bool ready = false;
  bool consumed = false;
  Reply value{Message{}};
  std::function<void(Reply)> cb;

  void fulfill(Reply r) {
    std::function<void(Reply)> fn;
    Reply copy{Message{}};
    {
      std::lock_guard<std::mutex> l(mu);
      if (ready) return;
      value = std::move(r);
      ready = true;
      if (cb) {
        fn = std::move(cb);
        cb = nullptr;
        consumed = true;
        copy = value;
      }
    }
    cv.notify_all();
    if (fn) fn(std::move(copy));
  }
};

/// One outstanding reply obligation. Shared by every copy of the
/// ReplyPromise that owns it; the last copy to die unanswered turns
/// into a broken-promise error for the requester.
struct PromiseUnit {
  std::shared_ptr<ResponseState> dest;
  std::atomic<bool> done{false};

  explicit PromiseUnit(std::shared_ptr<ResponseState> d) : dest(std::move(d)) {}

  void finish(Reply r) {
    if (done.exchange(true)) return;
    if (dest) dest->fulfill(std::move(r));
  }

  ~PromiseUnit() {
    if (!done.load() && dest)
      dest->fulfill(ActorError{ErrorCode::broken_promise,
                               "request dropped without a reply"});
  }
};

struct Envelope {
  ActorHandle sender;
  Message msg;
  std::shared_ptr<PromiseUnit> reply_to;
  bool poison = false;
};

struct Mailbox {
  enum class St { idle, queued, running };

  std::uint64_t id = 0;
  std::mutex mu;
  std::deque<Envelope> queue;
  St st = St::idle;
  std::atomic<bool> dead{false};
  ActorError exit_reason;
  std::shared_ptr<Behavior> behavior;
  std::vector<ActorHandle> monitors;
};

}  // namespace detail

// ---------------------------------------------------------------- promises

void ReplyPromise::deliver(Message msg) const {
  if (unit_) unit_->finish(std::move(msg));
}

void ReplyPromise::fail(ActorError err) const {
  if (unit_) unit_->finish(std::move(err));
}

Reply ResponseHandle::await() const {
  std::unique_lock<std::mutex> l(state_->mu);
  state_->cv.wait(l, [&] { return state_->ready; });
  state_->consumed = true;
  return state_->value;
}

void ResponseHandle::then(std::function<void(Reply)> fn) const {
  Reply copy{Message{}};
  {
    std::lock_guard<std::mutex> l(state_->mu);
    if (!state_->ready) {
      state_->cb = std::move(fn);
      return;
    }
    if (state_->consumed) return;
    state_->consumed = true;
    copy = state_->value;
  }
  fn(std::move(copy));
}

// ----------------------------------------------------------- handler result

HandlerResult HandlerResult::reply(Message msg) {
  HandlerResult r;
  r.action_ = Action::reply;
  r.msg_ = std::move(msg);
  return r;
}

HandlerResult HandlerResult::no_reply() { return HandlerResult{}; }

HandlerResult HandlerResult::error(ActorError err) {
  HandlerResult r;
  r.action_ = Action::error;
  r.err_ = std::move(err);
  return r;
}

HandlerResult HandlerResult::error(ErrorCode code, std::string what) {
  return error(ActorError{code, std::move(what)});
}

HandlerResult HandlerResult::delegate(ActorHandle target, Message msg) {
  HandlerResult r;
  r.action_ = Action::delegate;
  r.delegate_to_ = std::move(target);
  r.msg_ = std::move(msg);
  return r;
}

HandlerResult&& HandlerResult::and_become(Behavior b) && {
  become_ = std::make_shared<Behavior>(std::move(b));
  return std::move(*this);
}

HandlerResult&& HandlerResult::and_exit() && {
  exit_ = true;
  return std::move(*this);
}

// ----------------------------------------------------------------- context

ReplyPromise Context::take_promise() {
  promise_taken_ = true;
  return ReplyPromise(std::move(promise_));
}

void Context::send(const ActorHandle& to, Message msg) {
  sys_->send_from(self_, to, std::move(msg));
}

ResponseHandle Context::request(const ActorHandle& to, Message msg) {
  return sys_->request_from(self_, to, std::move(msg));
}

// ------------------------------------------------------------------ system

ActorSystem::ActorSystem(unsigned workers) {
  if (workers == 0) workers = 1;
  workers_.reserve(workers);
  for (unsigned i = 0; i < workers; ++i)
    workers_.emplace_back([this] { worker_loop(); });
}

ActorSystem::~ActorSystem() { shutdown(); }

ActorHandle ActorSystem::spawn(Behavior b) {
  auto mb = std::make_shared<detail::Mailbox>();
  mb->behavior = std::make_shared<Behavior>(std::move(b));
  ActorHandle h;
  h.sys_ = this;
  h.mb_ = mb;
  {
    std::lock_guard<std::mutex> l(mu_);
    mb->id = next_id_++;
    actors_.push_back(mb);
  }
  h.id_ = mb->id;
  return h;
}

void ActorSystem::send(const ActorHandle& to, Message msg) {
  send_from(ActorHandle{}, to, std::move(msg));
}

ResponseHandle ActorSystem::request(const ActorHandle& to, Message msg) {
  return request_from(ActorHandle{}, to, std::move(msg));
}

void ActorSystem::send_from(const ActorHandle& sender, const ActorHandle& to,
                            Message msg) {
  deliver(to, detail::Envelope{sender, std::move(msg), nullptr, false});
}

ResponseHandle ActorSystem::request_from(const ActorHandle& sender,
                                         const ActorHandle& to, Message msg) {
  auto state = std::make_shared<detail::ResponseState>();
  auto unit = std::make_shared<detail::PromiseUnit>(state);
  deliver(to, detail::Envelope{sender, std::move(msg), std::move(unit), false});
  return ResponseHandle(state);
}

void ActorSystem::monitor(const ActorHandle& target,
                          const ActorHandle& observer) {
  auto mb = target.mb_.lock();
  if (!mb) return;
  ActorError reason;
  {
    std::lock_guard<std::mutex> l(mb->mu);
    if (!mb->dead.load()) {
      mb->monitors.push_back(observer);
      return;
    }
    reason = mb->exit_reason;
  }
  ActorHandle from = target;
  send_from(from, observer,
            Message::of(Value::opaque(DownMsg{target.id(), reason})));
}

void ActorSystem::terminate(const ActorHandle& target) {
  deliver(target, detail::Envelope{ActorHandle{}, Message{}, nullptr, true});
}

void ActorSystem::deliver(const ActorHandle& to, detail::Envelope env) {
  auto mb = to.mb_.lock();
  if (!mb || mb->dead.load()) {
    if (env.reply_to)
      env.reply_to->finish(ActorError{ErrorCode::down, "actor is down"});
    return;
  }
  bool activate = false;
  {
    std::lock_guard<std::mutex> l(mb->mu);
    if (mb->dead.load()) {
      if (env.reply_to)
        env.reply_to->finish(ActorError{ErrorCode::down, "actor is down"});
      return;
    }
    mb->queue.push_back(std::move(env));
    if (mb->st == detail::Mailbox::St::idle) {
      mb->st = detail::Mailbox::St::queued;
      activate = true;
    }
  }
  if (activate) {
    std::lock_guard<std::mutex> l(mu_);
    run_queue_.push_back(mb);
    ++active_;
    work_cv_.notify_one();
  }
}

void ActorSystem::actor_exit(const std::shared_ptr<detail::Mailbox>& mb,
                             ActorError why) {
  std::deque<detail::Envelope> leftovers;
  std::vector<ActorHandle> monitors;
  {
    std::lock_guard<std::mutex> l(mb->mu);
    if (mb->dead.load()) return;
    mb->exit_reason = why;
    mb->dead.store(true);
    leftovers.swap(mb->queue);
    monitors.swap(mb->monitors);
  }
  for (auto& env : leftovers)
    if (env.reply_to)
      env.reply_to->finish(ActorError{ErrorCode::down, "actor is down"});
  ActorHandle from;
  from.id_ = mb->id;
  from.mb_ = mb;
  from.sys_ = this;
  for (auto& obs : monitors)
    send_from(from, obs,
              Message::of(Value::opaque(DownMsg{mb->id, why})));
}

ActorHandle ActorSystem::compose(ActorHandle outer, ActorHandle inner) {
  ActorSystem* sys = this;
  Behavior b;
  b.otherwise([sys, outer, inner](Context& ctx, Message m) -> HandlerResult {
    ReplyPromise promise = ctx.take_promise();
    ActorHandle self = ctx.self();
    sys->request_from(self, inner, std::move(m))
        .then([sys, self, outer, promise](Reply r) {
          if (is_error(r)) {
            promise.fail(get_error(r));
            return;
          }
          sys->request_from(self, outer, get_message(r))
              .then([promise](Reply r2) {
                if (is_error(r2))
                  promise.fail(get_error(r2));
                else
                  promise.deliver(get_message(r2));
              });
        });
    return HandlerResult::no_reply();
  });
  return spawn(std::move(b));
}

void ActorSystem::await_idle() {
  std::unique_lock<std::mutex> l(mu_);
  idle_cv_.wait(l, [&] { return active_ == 0; });
}

std::size_t ActorSystem::live_actors() const {
  std::lock_guard<std::mutex> l(mu_);
  std::size_t n = 0;
  for (const auto& mb : actors_)
    if (!mb->dead.load()) ++n;
  return n;
}

void ActorSystem::shutdown() {
  {
    std::lock_guard<std::mutex> l(mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  work_cv_.notify_all();
  for (auto& w : workers_) w.join();
  workers_.clear();
}

void ActorSystem::worker_loop() {
  for (;;) {
    std::shared_ptr<detail::Mailbox> mb;
    {
      std::unique_lock<std::mutex> l(mu_);
      work_cv_.wait(l, [&] { return stopping_ || !run_queue_.empty(); });
      if (run_queue_.empty()) {
        if (stopping_) return;
        continue;
      }
      mb = run_queue_.front();
      run_queue_.pop_front();
    }
    run_one(mb);
  }
}

namespace {

std::string describe_signature(const Message& msg) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < msg.size(); ++i) {
    if (i) os << ", ";
    os << kind_name(msg.at(i).kind());
  }
  os << ")";
  return os.str();
}

}  // namespace

void ActorSystem::run_one(const std::shared_ptr<detail::Mailbox>& mb) {
  {
    std::lock_guard<std::mutex> l(mb->mu);
    mb->st = detail::Mailbox::St::running;
  }
  for (;;) {
    std::deque<detail::Envelope> batch;
    {
      std::lock_guard<std::mutex> l(mb->mu);
      batch.swap(mb->queue);
    }
    if (batch.empty()) break;
    for (auto& env : batch) {
      if (mb->dead.load()) {
        if (env.reply_to)
          env.reply_to->finish(ActorError{ErrorCode::down, "actor is down"});
        continue;
      }
      if (env.poison) {
        actor_exit(mb, ActorError{ErrorCode::down, "terminated"});
        continue;
      }

      Context ctx;
      ctx.self_.id_ = mb->id;
      ctx.self_.mb_ = mb;
      ctx.self_.sys_ = this;
      ctx.sender_ = env.sender;
      ctx.sys_ = this;
      ctx.promise_ = env.reply_to;

      HandlerResult result = HandlerResult::error(
          ErrorCode::mismatch,
          "no handler for message " + describe_signature(env.msg));
      auto behavior = mb->behavior;
      for (const auto& clause : behavior->clauses) {
        if (!clause.match_any && !env.msg.matches(clause.sig)) continue;
        try {
          result = clause.fn(ctx, std::move(env.msg));
        } catch (const std::exception& e) {
          result = HandlerResult::error(ErrorCode::unhandled, e.what());
        }
        break;
      }

      if (!ctx.promise_taken_) {
        switch (result.action_) {
          case HandlerResult::Action::reply:
            if (env.reply_to) env.reply_to->finish(std::move(result.msg_));
            break;
          case HandlerResult::Action::error:
            if (env.reply_to) env.reply_to->finish(std::move(result.err_));
            break;
          case HandlerResult::Action::delegate:
            deliver(result.delegate_to_,
                    detail::Envelope{env.sender, std::move(result.msg_),
                                     std::move(env.reply_to), false});
            break;
          case HandlerResult::Action::no_reply:
            break;
        }
      }
      if (result.become_) mb->behavior = result.become_;
      if (result.exit_) actor_exit(mb, ActorError{ErrorCode::down, "exit"});
    }
  }
  bool requeue = false;
  {
    std::lock_guard<std::mutex> l(mb->mu);
    if (!mb->queue.empty()) {
      mb->st = detail::Mailbox::St::queued;
      requeue = true;
    } else {
      mb->st = detail::Mailbox::St::idle;
    }
  }
  {
    std::lock_guard<std::mutex> l(mu_);
    if (requeue) {
      run_queue_.push_back(mb);
      work_cv_.notify_one();
    } else {
      --active_;
      if (active_ == 0) idle_cv_.notify_all();
    }
  }
}

}  // namespace ndactor
