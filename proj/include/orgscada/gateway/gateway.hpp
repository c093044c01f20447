#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "orgscada/kernel/scheduler.hpp"
#include "orgscada/org/organization.hpp"

namespace httplib {
class Server;
}

namespace orgscada {

struct GatewayOptions {
  Duration open_timeout{10000};
  Duration setpoint_timeout{5000};
  Duration reachable_timeout{2000};
  Duration keepalive{15000};
  std::string cors_origin = "*";
};

// Everything a session told the console endpoint, as JSON with a "type" key,
// readable from HTTP threads.
class SessionHub {
 public:
  struct Session {
    std::string service;
    std::deque<Json> log;
    std::size_t base = 0;  // index of log.front()
    bool ended = false;
  };

  void create(const AgentId& ra, const std::string& service);
  void push(const SessionEvent& e);
  bool known(const std::string& ra) const;
  std::size_t cursor(const std::string& ra) const;
  // Waits until an event at or after `cursor` satisfies `match`; returns it
  // and advances the cursor past it.
  std::optional<Json> wait_for(const std::string& ra, std::size_t& cursor,
                               const std::function<bool(const Json&)>& match, Duration timeout);
  // Next events after `cursor`, waiting up to `timeout` for at least one.
  std::vector<Json> next(const std::string& ra, std::size_t& cursor, Duration timeout, bool* ended);
  std::vector<std::pair<std::string, Json>> list() const;
  void shutdown();

 private:
  mutable std::mutex mutex_;
  std::condition_variable changed_;
  std::map<std::string, Session> sessions_;
  bool stopping_ = false;
};

// JSON event for a session event: payload minus "op"/"ra", plus "type".
Json session_event_json(const SessionEvent& e);

// HTTP + server-push API of one organization. Handlers hop onto the
// organization's loop for every read or write of agent state.
class Gateway {
 public:
  Gateway(Organization& org, RealtimeLoop& loop, GatewayOptions options = {});
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // "host:port"; port 0 picks a free one. Throws AddressInUse.
  void start(const std::string& address);
  void stop();
  int port() const { return port_; }

 private:
  void routes();
  AgentId resolve_ra(const std::string& text) const;

  Organization& org_;
  RealtimeLoop& loop_;
  GatewayOptions options_;
  SessionHub hub_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int listener_ = 0;
  int port_ = 0;
  std::atomic<std::uint64_t> next_request_{1};
};

}  // namespace orgscada
