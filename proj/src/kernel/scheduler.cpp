#include "orgscada/kernel/scheduler.hpp"

namespace orgscada {

void SimScheduler::post_at(Time at, Task task) {
  if (at < now_) at = now_;
  queue_.push(Event{at, seq_++, std::move(task)});
}

Time SimScheduler::next_time() const { return queue_.empty() ? now_ : queue_.top().at; }

void SimScheduler::run_until(Time until) {
  while (!queue_.empty() && queue_.top().at <= until) {
    run_next_instant();
  }
  if (until > now_) now_ = until;
}

bool SimScheduler::run_next_instant() {
  if (queue_.empty()) return false;
  const Time at = queue_.top().at;
  now_ = at;
  while (!queue_.empty() && queue_.top().at == at) {
    // Copy out before popping: the task may post new events.
    Task task = std::move(const_cast<Event&>(queue_.top()).task);
    queue_.pop();
    ++executed_;
    task();
  }
  return true;
}

RealtimeLoop::RealtimeLoop() : origin_(std::chrono::steady_clock::now()) {}

RealtimeLoop::~RealtimeLoop() { stop(); }

Time RealtimeLoop::now() const {
  return std::chrono::duration_cast<Duration>(std::chrono::steady_clock::now() - origin_);
}

void RealtimeLoop::post_at(Time at, Task task) {
  {
    std::lock_guard lock(mutex_);
    queue_.push(Event{at, seq_++, std::move(task)});
  }
  wake_.notify_one();
}

void RealtimeLoop::start() {
  if (thread_.joinable()) return;
  {
    std::lock_guard lock(mutex_);
    stopping_ = false;
  }
  thread_ = std::thread([this] { run(); });
}

void RealtimeLoop::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  if (thread_.joinable() && !on_loop_thread()) thread_.join();
}

void RealtimeLoop::run() {
  std::unique_lock lock(mutex_);
  while (!stopping_) {
    if (queue_.empty()) {
      wake_.wait(lock);
      continue;
    }
    const Time at = queue_.top().at;
    const Time current = now();
    if (at > current) {
      wake_.wait_for(lock, at - current);
      continue;
    }
    Task task = std::move(const_cast<Event&>(queue_.top()).task);
    queue_.pop();
    lock.unlock();
    task();
    lock.lock();
  }
}

}  // namespace orgscada
