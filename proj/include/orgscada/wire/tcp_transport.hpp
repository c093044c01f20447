#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "orgscada/wire/transport.hpp"

namespace orgscada {

// Stream transport between organization processes. Each direction of a peer
// pair is its own connection: we dial peers to send, peers dial us to send.
// Envelopes read off any inbound connection go to `on_receive`, called on a
// reader thread.
class TcpTransport final : public Transport {
 public:
  using Receiver = std::function<void(MessageEnvelope)>;

  TcpTransport(std::string self_org, Receiver on_receive);
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  // Binds "host:port" (port 0 picks a free one). Throws AddressInUse.
  void listen(const std::string& address);
  int port() const { return port_; }

  // Dials a peer. Throws ConnectionRefused or Timeout.
  void connect(const std::string& org, const std::string& address, Duration timeout = Duration{5000});
  bool connected(const std::string& org) const;
  void disconnect(const std::string& org);

  // Peers to keep dialing in the background until a link is up; lost links
  // are dialed again. Messages are never retried.
  void set_peer(const std::string& org, const std::string& address);
  void keep_connected(Duration retry_every = Duration{500});

  // False when no link to the receiver's org is up, or the write failed.
  bool send(const MessageEnvelope& env) override;

  void stop();
  std::uint64_t frames_in() const { return frames_in_; }
  std::uint64_t frames_out() const { return frames_out_; }

 private:
  struct Link {
    int fd = -1;
    std::mutex write_mutex;
    std::atomic<bool> up{true};
  };

  void accept_loop();
  void read_loop(int fd);
  void watch_link(std::string org, std::shared_ptr<Link> link);
  void spawn(std::function<void()> fn);

  std::string self_;
  Receiver on_receive_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Link>> links_;  // outbound, by peer org
  std::map<std::string, std::string> peers_;            // org -> address
  std::vector<int> inbound_fds_;
  std::vector<std::thread> threads_;
  std::atomic<std::uint64_t> frames_in_{0};
  std::atomic<std::uint64_t> frames_out_{0};
};

}  // namespace orgscada
