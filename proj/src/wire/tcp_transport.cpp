#include "orgscada/wire/tcp_transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "orgscada/wire/codec.hpp"

namespace orgscada {

namespace {

std::pair<std::string, int> host_port(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) fail(ErrorCode::InvalidArgument, "address '" + address + "' lacks a port");
  try {
    return {address.substr(0, colon), std::stoi(address.substr(colon + 1))};
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument, "bad port in '" + address + "'");
  }
}

sockaddr_in resolve(const std::string& host, int port) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(static_cast<std::uint16_t>(port));
  const std::string h = host.empty() || host == "localhost" ? "127.0.0.1" : host;
  if (inet_pton(AF_INET, h.c_str(), &sa.sin_addr) == 1) return sa;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  addrinfo* res = nullptr;
  if (getaddrinfo(h.c_str(), nullptr, &hints, &res) != 0 || !res) {
    fail(ErrorCode::ConnectionRefused, "cannot resolve " + host);
  }
  sa.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return sa;
}

bool write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

}  // namespace

TcpTransport::TcpTransport(std::string self_org, Receiver on_receive)
    : self_(std::move(self_org)), on_receive_(std::move(on_receive)) {}

TcpTransport::~TcpTransport() { stop(); }

void TcpTransport::spawn(std::function<void()> fn) {
  std::lock_guard lock(mutex_);
  threads_.emplace_back(std::move(fn));
}

void TcpTransport::listen(const std::string& address) {
  const auto [host, port] = host_port(address);
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) fail(ErrorCode::AddressInUse, std::strerror(errno));
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa = resolve(host, port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 || ::listen(fd, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd);
    fail(ErrorCode::AddressInUse, address + ": " + why);
  }
  socklen_t len = sizeof sa;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
  port_ = ntohs(sa.sin_port);
  listen_fd_ = fd;
  spawn([this] { accept_loop(); });
}

void TcpTransport::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    {
      std::lock_guard lock(mutex_);
      inbound_fds_.push_back(fd);
    }
    spawn([this, fd] { read_loop(fd); });
  }
}

void TcpTransport::read_loop(int fd) {
  wire::FrameReader reader;
  std::uint8_t buf[8192];
  while (!stopping_) {
    pollfd p{fd, POLLIN, 0};
    const int r = ::poll(&p, 1, 100);
    if (r == 0) continue;
    if (r < 0 && errno == EINTR) continue;
    const ssize_t n = r < 0 ? -1 : ::recv(fd, buf, sizeof buf, 0);
    if (n <= 0) break;
    try {
      reader.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
      while (auto env = reader.next()) {
        ++frames_in_;
        on_receive_(std::move(*env));
      }
    } catch (const Error&) {
      break;  // garbage on the stream: drop the connection
    }
  }
  std::lock_guard lock(mutex_);
  std::erase(inbound_fds_, fd);
  ::close(fd);
}

void TcpTransport::connect(const std::string& org, const std::string& address, Duration timeout) {
  const auto [host, port] = host_port(address);
  const sockaddr_in sa = resolve(host, port);
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0);
  if (fd < 0) fail(ErrorCode::ConnectionRefused, std::strerror(errno));
  int rc = ::connect(fd, reinterpret_cast<const sockaddr*>(&sa), sizeof sa);
  if (rc != 0 && errno != EINPROGRESS) {
    ::close(fd);
    fail(ErrorCode::ConnectionRefused, address);
  }
  if (rc != 0) {
    pollfd p{fd, POLLOUT, 0};
    rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc == 0) {
      ::close(fd);
      fail(ErrorCode::Timeout, "connect to " + address);
    }
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (rc < 0 || err != 0) {
      ::close(fd);
      fail(ErrorCode::ConnectionRefused, address);
    }
  }
  ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) & ~O_NONBLOCK);
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

  auto link = std::make_shared<Link>();
  link->fd = fd;
  {
    std::lock_guard lock(mutex_);
    if (auto old = links_.find(org); old != links_.end()) {
      old->second->up = false;
      ::shutdown(old->second->fd, SHUT_RDWR);
    }
    links_[org] = link;
  }
  spawn([this, org, link] { watch_link(org, link); });
}

// Peers never write on our outbound connection; a readable socket means EOF
// or reset, so the link is gone.
void TcpTransport::watch_link(std::string org, std::shared_ptr<Link> link) {
  while (!stopping_ && link->up) {
    pollfd p{link->fd, POLLIN, 0};
    const int r = ::poll(&p, 1, 100);
    if (r == 0) continue;
    if (r < 0 && errno == EINTR) continue;
    std::uint8_t b;
    if (r > 0 && ::recv(link->fd, &b, 1, MSG_DONTWAIT) > 0) continue;
    break;
  }
  link->up = false;
  {
    std::lock_guard lock(mutex_);
    if (auto it = links_.find(org); it != links_.end() && it->second == link) links_.erase(it);
  }
  std::lock_guard w(link->write_mutex);
  ::close(link->fd);
  link->fd = -1;
}

bool TcpTransport::connected(const std::string& org) const {
  std::lock_guard lock(mutex_);
  const auto it = links_.find(org);
  return it != links_.end() && it->second->up;
}

void TcpTransport::disconnect(const std::string& org) {
  std::lock_guard lock(mutex_);
  if (auto it = links_.find(org); it != links_.end()) {
    it->second->up = false;
    ::shutdown(it->second->fd, SHUT_RDWR);
  }
}

bool TcpTransport::send(const MessageEnvelope& env) {
  std::shared_ptr<Link> link;
  {
    std::lock_guard lock(mutex_);
    const auto it = links_.find(env.receiver.org_name);
    if (it == links_.end()) return false;
    link = it->second;
  }
  const wire::Bytes frame = wire::encode(env);
  std::lock_guard w(link->write_mutex);
  if (!link->up || link->fd < 0) return false;
  if (!write_all(link->fd, frame.data(), frame.size())) {
    link->up = false;
    ::shutdown(link->fd, SHUT_RDWR);
    return false;
  }
  ++frames_out_;
  return true;
}

void TcpTransport::set_peer(const std::string& org, const std::string& address) {
  std::lock_guard lock(mutex_);
  peers_[org] = address;
}

void TcpTransport::keep_connected(Duration retry_every) {
  spawn([this, retry_every] {
    while (!stopping_) {
      std::map<std::string, std::string> peers;
      {
        std::lock_guard lock(mutex_);
        peers = peers_;
      }
      for (const auto& [org, address] : peers) {
        if (stopping_ || connected(org)) continue;
        try {
          connect(org, address, std::min(retry_every, Duration{5000}));
        } catch (const Error&) {
          // peer not up yet
        }
      }
      for (Duration slept{0}; slept < retry_every && !stopping_; slept += Duration{50}) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
    }
  });
}

void TcpTransport::stop() {
  if (stopping_.exchange(true)) return;
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mutex_);
    for (auto& [org, link] : links_) {
      link->up = false;
      ::shutdown(link->fd, SHUT_RDWR);
    }
    for (int fd : inbound_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  // Threads may still spawn others until they see stopping_; join until none are left.
  for (;;) {
    {
      std::lock_guard lock(mutex_);
      if (threads_.empty()) break;
      threads.swap(threads_);
    }
    for (auto& t : threads) t.join();
    threads.clear();
  }
  std::lock_guard lock(mutex_);
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

}  // namespace orgscada
