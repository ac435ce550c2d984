#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "freqadmm/net/nodes.hpp"
#include "freqadmm/net/sim.hpp"
#include "freqadmm/net/transport.hpp"

namespace freqadmm::net {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Session clock: wall time since construction times the compression factor.
class SessionClock {
 public:
  explicit SessionClock(double compression)
      : origin_(std::chrono::steady_clock::now()), k_(compression) {}
  [[nodiscard]] double now() const;
  [[nodiscard]] std::chrono::steady_clock::time_point wall(double session_t) const;

 private:
  std::chrono::steady_clock::time_point origin_;
  double k_;
};

// Self-pipe used to wake a poll loop from another thread.
class Waker {
 public:
  Waker();
  ~Waker();
  Waker(const Waker&) = delete;
  Waker& operator=(const Waker&) = delete;
  void wake();
  void drain();
  [[nodiscard]] int fd() const { return fds_[0]; }

 private:
  int fds_[2] = {-1, -1};
};

/// TCP front end of a GatewayNode. One thread runs serve(); stop() may be
/// called from any thread.
class SocketGateway {
 public:
  // Binds and listens; port 0 picks an ephemeral port. Throws
  // TransportError on bind failure.
  SocketGateway(GatewayNode& node, TransportProfile profile,
                const std::string& host = "127.0.0.1", std::uint16_t port = 0);
  ~SocketGateway();
  SocketGateway(const SocketGateway&) = delete;
  SocketGateway& operator=(const SocketGateway&) = delete;

  [[nodiscard]] std::uint16_t port() const { return port_; }
  void set_round_gate(RoundGate gate) { gate_ = std::move(gate); }

  // Serves until `done` holds (checked after every batch of input and at
  // least every 20 ms) or stop() is called. Closes every connection on
  // return.
  void serve(const std::function<bool()>& done);
  void stop();
  [[nodiscard]] double now() const { return clock_.now(); }
  [[nodiscard]] const SessionLog& log() const { return log_; }

 private:
  struct Client {
    int fd = -1;
    FrameReader reader;
    bool registered = false;
    bool refused = false;
    DeviceId id = 0;
  };

  void handle(Client& c, const Message& m);
  void send_out(std::vector<Outbound> out);
  void drop(std::size_t idx, const std::string& why);

  GatewayNode& node_;
  TransportProfile profile_;
  SessionClock clock_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  Waker waker_;
  std::atomic<bool> stop_{false};
  std::vector<std::unique_ptr<Client>> clients_;
  std::map<DeviceId, int> route_;
  std::size_t rounds_seen_ = 0;
  RoundGate gate_;
  SessionLog log_;
};

/// TCP client side of a DeviceNode. Emulated link latency is slept before
/// each send.
class SocketDevice {
 public:
  SocketDevice(DeviceNode& node, TransportProfile profile, std::string host,
               std::uint16_t port);
  ~SocketDevice();
  SocketDevice(const SocketDevice&) = delete;
  SocketDevice& operator=(const SocketDevice&) = delete;

  // Connects (up to `connect_attempts` tries 10 ms apart), registers and
  // serves until the gateway closes the connection or stop() is called.
  // Throws TransportError when no connection can be made.
  void run(int connect_attempts = 200);
  void stop();

  // Serialized access to the node from other threads.
  template <typename F>
  decltype(auto) with_node(F&& f) {
    std::lock_guard lk(mu_);
    return f(node_);
  }

  [[nodiscard]] const SessionLog& log() const { return log_; }

 private:
  bool send(const Message& m);
  void sleep_link();

  DeviceNode& node_;
  TransportProfile profile_;
  std::string host_;
  std::uint16_t port_;
  SessionClock clock_;
  DelaySampler delays_;
  std::mutex mu_;
  Waker waker_;
  std::atomic<bool> stop_{false};
  int fd_ = -1;
  SessionLog log_;
};

struct GatewayRunOptions {
  GatewayConfig gateway;
  TransportProfile transport;
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::vector<std::shared_ptr<RowTap>> taps;
  // Stop condition; the session runs until it holds.
  std::function<bool(const GatewayNode&)> done;
  std::function<void(std::uint16_t)> on_listening;
};

// Standalone endpoints over TCP. Both return the session log.
SessionLog gateway_run(const GatewayRunOptions& options);
SessionLog device_run(DeviceId id, const UtilityFunction& f, double a, double gamma,
                      const TransportProfile& transport, const std::string& host,
                      std::uint16_t port, const SolverConfig& cfg = {});

}  // namespace freqadmm::net
