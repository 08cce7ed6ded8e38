#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <variant>
#include <vector>

#include "ndactor/value.hpp"

namespace ndactor {

class ActorSystem;
class Context;
struct Behavior;

namespace detail {
struct Envelope;
struct Mailbox;
struct PromiseUnit;
struct ResponseState;
}  // namespace detail

/// Either a successful reply message or the error that took its place.
using Reply = std::variant<Message, ActorError>;

inline bool is_error(const Reply& r) { return r.index() == 1; }
inline const ActorError& get_error(const Reply& r) {
  return std::get<ActorError>(r);
}
inline const Message& get_message(const Reply& r) {
  return std::get<Message>(r);
}

/// Cheap copyable reference to an actor. Stays valid after the actor
/// exits; messages sent to a dead actor fail with a down error.
class ActorHandle {
public:
  ActorHandle() = default;

  std::uint64_t id() const { return id_; }
  bool valid() const { return id_ != 0; }
  ActorSystem* system() const { return sys_; }

  friend bool operator==(const ActorHandle& a, const ActorHandle& b) {
    return a.id_ == b.id_;
  }

private:
  friend class ActorSystem;
  friend class Context;
  std::uint64_t id_ = 0;
  std::weak_ptr<detail::Mailbox> mb_;
  ActorSystem* sys_ = nullptr;
};

/// Delivered to monitors when the watched actor exits.
struct DownMsg {
  std::uint64_t actor_id = 0;
  ActorError reason;
};

/// Obligation to answer one request. Deliver or fail it exactly once;
/// a promise dropped without an answer fails the requester with a
/// broken-promise error. Copies share the obligation.
class ReplyPromise {
public:
  ReplyPromise() = default;

  bool valid() const { return unit_ != nullptr; }
  void deliver(Message msg) const;
  void fail(ActorError err) const;

private:
  friend class ActorSystem;
  friend class Context;
  explicit ReplyPromise(std::shared_ptr<detail::PromiseUnit> u)
      : unit_(std::move(u)) {}
  std::shared_ptr<detail::PromiseUnit> unit_;
};

/// Caller side of a request. Consume the outcome once, either by
/// blocking with await() or by registering a continuation with then().
class ResponseHandle {
public:
  ResponseHandle() = default;

  bool valid() const { return state_ != nullptr; }
  Reply await() const;
  void then(std::function<void(Reply)> fn) const;

private:
  friend class ActorSystem;
  explicit ResponseHandle(std::shared_ptr<detail::ResponseState> s)
      : state_(std::move(s)) {}
  std::shared_ptr<detail::ResponseState> state_;
};

/// What a message handler tells the runtime to do afterwards.
class HandlerResult {
public:
  static HandlerResult reply(Message msg);
  static HandlerResult no_reply();
  static HandlerResult error(ActorError err);
  static HandlerResult error(ErrorCode code, std::string what);
  /// Hand the message (and the pending reply obligation) to `target`.
  static HandlerResult delegate(ActorHandle target, Message msg);

  HandlerResult&& and_become(Behavior b) &&;
  HandlerResult&& and_exit() &&;

private:
  friend class ActorSystem;
  HandlerResult() = default;
  enum class Action { reply, no_reply, error, delegate };
  Action action_ = Action::no_reply;
  Message msg_;
  ActorError err_;
  ActorHandle delegate_to_;
  std::shared_ptr<Behavior> become_;
  bool exit_ = false;
};

using Handler = std::function<HandlerResult(Context&, Message)>;

/// Message handlers keyed by kind signature, tried in order of
/// registration. A message no clause accepts is answered with a
/// type-mismatch error straight away.
struct Behavior {
  struct Clause {
    std::vector<ValueKind> sig;
    Handler fn;
    bool match_any = false;
  };

  Behavior& on(std::vector<ValueKind> sig, Handler fn) {
    clauses.push_back({std::move(sig), std::move(fn), false});
    return *this;
  }
  /// Catch-all clause; also the only way to receive DownMsg and other
  /// opaque payloads without naming them.
  Behavior& otherwise(Handler fn) {
    clauses.push_back({{}, std::move(fn), true});
    return *this;
  }
  /// Matches a single opaque slot holding a T.
  template <typename T>
  Behavior& on_opaque(std::function<HandlerResult(Context&, T)> fn) {
    clauses.push_back(
        {{ValueKind::opaque},
         [fn = std::move(fn)](Context& ctx, Message m) -> HandlerResult {
           const T* p = std::any_cast<T>(&m.at(0).as_opaque());
           if (!p)
             return HandlerResult::error(ErrorCode::unhandled,
                                         "unexpected opaque payload");
           return fn(ctx, *p);
         },
         false});
    return *this;
  }

  std::vector<Clause> clauses;
};

/// Handed to a handler while it runs.
class Context {
public:
  const ActorHandle& self() const { return self_; }
  const ActorHandle& sender() const { return sender_; }
  ActorSystem& system() const { return *sys_; }

  /// Detach the reply obligation from the current message so it can be
  /// answered later, after the handler has returned. Once taken, the
  /// handler's own result no longer answers the request.
  ReplyPromise take_promise();

  void send(const ActorHandle& to, Message msg);
  ResponseHandle request(const ActorHandle& to, Message msg);

private:
  friend class ActorSystem;
  ActorHandle self_;
  ActorHandle sender_;
  ActorSystem* sys_ = nullptr;
  std::shared_ptr<detail::PromiseUnit> promise_;
  bool promise_taken_ = false;
};

/// Runtime hosting the actors: a fixed pool of worker threads drains
/// per-actor mailboxes. An actor runs on one worker at a time, and
/// messages from any one sender arrive in the order they were sent.
class ActorSystem {
public:
  explicit ActorSystem(
      unsigned workers = std::max(2u, std::thread::hardware_concurrency()));
  ~ActorSystem();

  ActorSystem(const ActorSystem&) = delete;
  ActorSystem& operator=(const ActorSystem&) = delete;

  ActorHandle spawn(Behavior b);

  /// Fire-and-forget from outside the system; any reply is dropped.
  void send(const ActorHandle& to, Message msg);
  ResponseHandle request(const ActorHandle& to, Message msg);

  /// `observer` receives a DownMsg (opaque slot) when `target` exits.
  /// Monitoring an actor that is already down delivers it immediately.
  void monitor(const ActorHandle& target, const ActorHandle& observer);

  /// Ask the actor to stop: monitors fire, queued requests fail.
  void terminate(const ActorHandle& target);

  /// Actor that pipes every message through `inner`, then feeds the
  /// reply to `outer` and answers with what `outer` said. Errors pass
  /// through from whichever stage produced them.
  ActorHandle compose(ActorHandle outer, ActorHandle inner);

  /// Blocks until every mailbox is empty and no handler is running.
  void await_idle();

  std::size_t live_actors() const;

  void shutdown();

private:
  friend class Context;
  friend class ReplyPromise;

  void deliver(const ActorHandle& to, detail::Envelope env);
  void actor_exit(const std::shared_ptr<detail::Mailbox>& mb, ActorError why);
  void worker_loop();
  void run_one(const std::shared_ptr<detail::Mailbox>& mb);

  ResponseHandle request_from(const ActorHandle& sender, const ActorHandle& to,
                              Message msg);
  void send_from(const ActorHandle& sender, const ActorHandle& to,
                 Message msg);

  mutable std::mutex mu_;
  std::condition_variable work_cv_;
  std::condition_variable idle_cv_;
  std::deque<std::shared_ptr<detail::Mailbox>> run_queue_;
  std::vector<std::shared_ptr<detail::Mailbox>> actors_;
  std::vector<std::thread> workers_;
  std::uint64_t next_id_ = 1;
  unsigned active_ = 0;
  bool stopping_ = false;
};

/// Composition in application order: (g * f) sends to f first.
inline ActorHandle operator*(const ActorHandle& g, const ActorHandle& f) {
  return g.system()->compose(g, f);
}

}  // namespace ndactor
