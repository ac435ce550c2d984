#include "freqadmm/net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

namespace freqadmm::net {

namespace {

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

bool write_all(int fd, const std::string& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

// 0 on EOF, -1 on error, else bytes read into `reader`.
ssize_t read_some(int fd, FrameReader& reader) {
  char buf[4096];
  for (;;) {
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n > 0) reader.feed(std::string_view(buf, static_cast<std::size_t>(n)));
    return n;
  }
}

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw TransportError("bad IPv4 address: " + host);
  }
  return addr;
}

void no_delay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

int poll_ms(std::chrono::steady_clock::time_point until) {
  const auto left = until - std::chrono::steady_clock::now();
  const auto ms = std::chrono::ceil<std::chrono::milliseconds>(left).count();
  return static_cast<int>(std::clamp<long long>(ms, 0, 20));
}

}  // namespace

double SessionClock::now() const {
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - origin_;
  return dt.count() * k_;
}

std::chrono::steady_clock::time_point SessionClock::wall(double session_t) const {
  return origin_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                       std::chrono::duration<double>(session_t / k_));
}

Waker::Waker() {
  if (::pipe2(fds_, O_NONBLOCK | O_CLOEXEC) != 0) throw TransportError(errno_text("pipe"));
}

Waker::~Waker() {
  ::close(fds_[0]);
  ::close(fds_[1]);
}

void Waker::wake() {
  const char b = 1;
  [[maybe_unused]] auto n = ::write(fds_[1], &b, 1);
}

void Waker::drain() {
  char buf[64];
  while (::read(fds_[0], buf, sizeof buf) > 0) {
  }
}

SocketGateway::SocketGateway(GatewayNode& node, TransportProfile profile,
                             const std::string& host, std::uint16_t port)
    : node_(node), profile_(std::move(profile)), clock_(profile_.time_compression) {
  profile_.validate();
  const sockaddr_in addr = make_addr(host, port);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw TransportError(errno_text("socket"));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    const auto msg = errno_text(("bind " + host + ":" + std::to_string(port)).c_str());
    ::close(listen_fd_);
    throw TransportError(msg);
  }
  if (::listen(listen_fd_, 64) != 0) {
    const auto msg = errno_text("listen");
    ::close(listen_fd_);
    throw TransportError(msg);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

SocketGateway::~SocketGateway() {
  for (auto& c : clients_) ::close(c->fd);
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void SocketGateway::stop() {
  stop_ = true;
  waker_.wake();
}

void SocketGateway::drop(std::size_t idx, const std::string& why) {
  Client& c = *clients_[idx];
  if (c.registered) {
    auto it = route_.find(c.id);
    if (it != route_.end() && it->second == c.fd) route_.erase(it);
  }
  log_.push_back({clock_.now(), "socket", "disconnected",
                  (c.registered ? "device " + std::to_string(c.id) : std::string("peer")) +
                      ": " + why});
  ::close(c.fd);
  clients_.erase(clients_.begin() + static_cast<std::ptrdiff_t>(idx));
}

void SocketGateway::send_out(std::vector<Outbound> out) {
  if (node_.rounds() > rounds_seen_) {
    rounds_seen_ = node_.rounds();
    if (gate_) {
      for (const auto& m : gate_(node_.trace().back())) {
        auto more = node_.on_message(m, clock_.now());
        out.insert(out.end(), std::make_move_iterator(more.begin()),
                   std::make_move_iterator(more.end()));
      }
    }
  }
  for (const auto& o : out) {
    auto it = route_.find(o.to);
    if (it == route_.end() || !write_all(it->second, frame(o.msg))) {
      log_.push_back({clock_.now(), "socket", "send_failed", "device " + std::to_string(o.to)});
    }
  }
}

void SocketGateway::handle(Client& c, const Message& m) {
  if (const auto* r = std::get_if<Register>(&m)) {
    const bool known = route_.count(r->device_id) != 0;
    auto out = node_.on_message(m, clock_.now());
    if (!known && !c.registered) {
      const auto& ids = node_.devices();
      const bool admitted = std::find(ids.begin(), ids.end(), r->device_id) != ids.end();
      // Joins queued mid-round are admitted at the round boundary.
      if (admitted || node_.phase() == GatewayPhase::Iterating) {
        c.registered = true;
        c.id = r->device_id;
        route_[c.id] = c.fd;
      }
    }
    if (!c.registered) c.refused = true;
    send_out(std::move(out));
    return;
  }
  send_out(node_.on_message(m, clock_.now()));
}

void SocketGateway::serve(const std::function<bool()>& done) {
  std::vector<pollfd> fds;
  while (!stop_ && !done()) {
    fds.clear();
    fds.push_back({listen_fd_, POLLIN, 0});
    fds.push_back({waker_.fd(), POLLIN, 0});
    for (const auto& c : clients_) fds.push_back({c->fd, POLLIN, 0});
    auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(20);
    if (auto dl = node_.deadline()) until = std::min(until, clock_.wall(*dl));
    const int rc = ::poll(fds.data(), fds.size(), poll_ms(until));
    if (rc < 0 && errno != EINTR) throw TransportError(errno_text("poll"));

    if (fds[1].revents) waker_.drain();
    if (fds[0].revents & POLLIN) {
      const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
      if (fd >= 0) {
        no_delay(fd);
        auto c = std::make_unique<Client>();
        c->fd = fd;
        clients_.push_back(std::move(c));
      }
    }
    // Client list may shrink while iterating; walk by index from the back.
    for (std::size_t k = fds.size(); k-- > 2;) {
      if (!fds[k].revents) continue;
      const std::size_t idx = k - 2;
      if (idx >= clients_.size() || clients_[idx]->fd != fds[k].fd) continue;
      Client& c = *clients_[idx];
      const ssize_t n = read_some(c.fd, c.reader);
      if (n <= 0) {
        drop(idx, n == 0 ? "closed" : std::strerror(errno));
        continue;
      }
      try {
        while (auto m = c.reader.next()) handle(c, *m);
      } catch (const WireError& e) {
        drop(idx, std::string("wire error: ") + e.what());
        continue;
      }
      if (c.refused) drop(idx, "registration rejected");
    }
    node_.on_timer(clock_.now());
  }
  for (auto& c : clients_) ::close(c->fd);
  clients_.clear();
  route_.clear();
}

SocketDevice::SocketDevice(DeviceNode& node, TransportProfile profile,
                           std::string host, std::uint16_t port)
    : node_(node),
      profile_(std::move(profile)),
      host_(std::move(host)),
      port_(port),
      clock_(profile_.time_compression),
      delays_(profile_.seed ^ (0x9e3779b97f4a7c15ULL * (node.id() + 1))) {
  profile_.validate();
}

SocketDevice::~SocketDevice() {
  if (fd_ >= 0) ::close(fd_);
}

void SocketDevice::stop() {
  stop_ = true;
  waker_.wake();
}

void SocketDevice::sleep_link() {
  const double d = delays_.draw(profile_.link(node_.id()));
  if (d > 0.0) {
    std::this_thread::sleep_for(std::chrono::duration<double>(d / profile_.time_compression));
  }
}

bool SocketDevice::send(const Message& m) {
  sleep_link();
  if (write_all(fd_, frame(m))) return true;
  log_.push_back({clock_.now(), "device " + std::to_string(node_.id()), "transport_lost",
                  std::strerror(errno)});
  return false;
}

void SocketDevice::run(int connect_attempts) {
  const sockaddr_in addr = make_addr(host_, port_);
  const std::string me = "device " + std::to_string(node_.id());
  for (int attempt = 0;; ++attempt) {
    fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) throw TransportError(errno_text("socket"));
    if (::connect(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) break;
    ::close(fd_);
    fd_ = -1;
    if (attempt + 1 >= connect_attempts || stop_) {
      log_.push_back({clock_.now(), me, "connect_failed", host_ + ":" + std::to_string(port_)});
      throw TransportError(me + ": cannot reach gateway at " + host_ + ":" + std::to_string(port_));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  no_delay(fd_);

  Register hello;
  {
    std::lock_guard lk(mu_);
    hello = node_.hello();
  }
  if (!send(hello)) return;

  FrameReader reader;
  std::uint64_t epoch = 0;
  double next_send = 0.0;  // session time the next packet transfer starts
  bool sending = false;
  double rate = 0.0;
  while (!stop_) {
    auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(20);
    if (sending) until = std::min(until, clock_.wall(next_send));
    pollfd fds[2] = {{fd_, POLLIN, 0}, {waker_.fd(), POLLIN, 0}};
    const int rc = ::poll(fds, 2, poll_ms(until));
    if (rc < 0 && errno != EINTR) throw TransportError(errno_text("poll"));
    if (fds[1].revents) waker_.drain();

    if (fds[0].revents) {
      const ssize_t n = read_some(fd_, reader);
      if (n <= 0) {
        log_.push_back({clock_.now(), me, "session_closed", n == 0 ? "eof" : std::strerror(errno)});
        return;
      }
      while (auto m = reader.next()) {
        std::vector<Message> replies;
        {
          std::lock_guard lk(mu_);
          try {
            replies = node_.on_message(*m, clock_.now());
          } catch (const std::exception& e) {
            log_.push_back({clock_.now(), me, "aborted", e.what()});
            return;
          }
          if (node_.epoch() != epoch) {
            epoch = node_.epoch();
            sending = node_.sending();
            rate = node_.rate();
            next_send = clock_.now();
          }
        }
        for (const auto& r : replies) {
          if (!send(r)) return;
        }
      }
    }

    if (sending && clock_.now() >= next_send) {
      // Blocking-send model: the transfer holds the sender for the link
      // latency, then the sender waits one period.
      const double d = delays_.draw(profile_.link(node_.id()));
      const double done_at = next_send + d;
      std::this_thread::sleep_until(clock_.wall(done_at));
      DataPacket p;
      {
        std::lock_guard lk(mu_);
        p = node_.next_packet(done_at);
      }
      if (!write_all(fd_, frame(p))) {
        log_.push_back({clock_.now(), me, "transport_lost", std::strerror(errno)});
        return;
      }
      next_send = done_at + 1.0 / rate;
    }
  }
}

SessionLog gateway_run(const GatewayRunOptions& options) {
  GatewayNode node(options.gateway);
  for (const auto& tap : options.taps) node.attach(tap);
  SocketGateway gw(node, options.transport, options.host, options.port);
  if (options.on_listening) options.on_listening(gw.port());
  gw.serve([&] { return options.done && options.done(node); });
  for (const auto& tap : options.taps) tap->close();
  SessionLog log = node.log();
  log.insert(log.end(), gw.log().begin(), gw.log().end());
  return log;
}

SessionLog device_run(DeviceId id, const UtilityFunction& f, double a, double gamma,
                      const TransportProfile& transport, const std::string& host,
                      std::uint16_t port, const SolverConfig& cfg) {
  DeviceNode node(id, f, a, gamma, cfg);
  SocketDevice dev(node, transport, host, port);
  dev.run();
  SessionLog log = node.log();
  log.insert(log.end(), dev.log().begin(), dev.log().end());
  return log;
}

}  // namespace freqadmm::net
