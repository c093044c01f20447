#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <future>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

#include "orgscada/common.hpp"

namespace orgscada {

// Single-owner event executor. All agent handlers of the nodes bound to one
// scheduler run sequentially on it.
class Scheduler {
 public:
  using Task = std::function<void()>;

  virtual ~Scheduler() = default;
  virtual Time now() const = 0;
  virtual void post_at(Time at, Task task) = 0;

  void post(Task task) { post_at(now(), std::move(task)); }
  void post_after(Duration delay, Task task) { post_at(now() + delay, std::move(task)); }
};

// Discrete-event scheduler on a simulated clock. Events at equal times run in
// posting order.
class SimScheduler final : public Scheduler {
 public:
  Time now() const override { return now_; }
  void post_at(Time at, Task task) override;

  bool empty() const { return queue_.empty(); }
  Time next_time() const;
  // Runs every event with time <= until, then sets the clock to `until`.
  void run_until(Time until);
  // Runs all events sharing the earliest pending timestamp. Returns false when idle.
  bool run_next_instant();
  std::uint64_t executed() const { return executed_; }

 private:
  struct Event {
    Time at;
    std::uint64_t seq;
    Task task;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  Time now_{0};
  std::uint64_t seq_ = 0;
  std::uint64_t executed_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
};

// Wall-clock event loop on a dedicated thread. post_at is thread-safe; now()
// counts milliseconds since construction.
class RealtimeLoop final : public Scheduler {
 public:
  RealtimeLoop();
  ~RealtimeLoop() override;
  RealtimeLoop(const RealtimeLoop&) = delete;
  RealtimeLoop& operator=(const RealtimeLoop&) = delete;

  Time now() const override;
  void post_at(Time at, Task task) override;

  void start();
  void stop();
  bool on_loop_thread() const { return std::this_thread::get_id() == thread_.get_id(); }

  // Runs fn on the loop thread and waits for its result.
  template <typename F>
  auto call(F&& fn) -> decltype(fn()) {
    using R = decltype(fn());
    if (on_loop_thread()) return fn();
    auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(fn));
    auto result = task->get_future();
    post([task] { (*task)(); });
    return result.get();
  }

 private:
  struct Event {
    Time at;
    std::uint64_t seq;
    Task task;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  void run();

  std::chrono::steady_clock::time_point origin_;
  mutable std::mutex mutex_;
  std::condition_variable wake_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  bool stopping_ = false;
  std::thread thread_;
};

}  // namespace orgscada
