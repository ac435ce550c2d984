#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "freqadmm/net/nodes.hpp"
#include "freqadmm/net/transport.hpp"

namespace freqadmm::net {

// Called after each completed round, before its broadcasts go out. Returned
// messages are handed to the gateway first (operator channel).
using RoundGate = std::function<std::vector<Message>(const TraceRow&)>;

/// Discrete-event driver for one gateway and its devices on a virtual clock.
///
/// Every message crosses the wire as a frame and is decoded on delivery.
/// Each hop draws a latency from the device's link profile. A device in its
/// data phase sends a packet, blocks for the link latency, then waits
/// 1/rate before the next send. Ties in time are broken by scheduling order,
/// so a run is a pure function of the profile seed and the inputs.
class SimNetwork {
 public:
  SimNetwork(GatewayNode& gateway, TransportProfile profile);

  // The device registers at `at` (default: now). The node must outlive the
  // network.
  void attach(DeviceNode& device, double at = -1.0);
  // Operator message, delivered to the gateway at the current time.
  void inject(const Message& m);
  void set_round_gate(RoundGate gate) { gate_ = std::move(gate); }

  // Processes events until `done` holds (true) or the queue runs dry or the
  // next event lies past `horizon` (false).
  bool run_until(const std::function<bool()>& done, double horizon);
  void run_for(double seconds);

  [[nodiscard]] double now() const { return now_; }
  [[nodiscard]] DeviceNode& device(DeviceId id) { return *devices_.at(id); }
  [[nodiscard]] const SessionLog& log() const { return log_; }

  // Captures every frame sent (both directions) when enabled.
  void record_wire(bool on) { record_ = on; }
  [[nodiscard]] const std::vector<std::string>& wire() const { return wire_; }

 private:
  enum class Kind { ToGateway, ToDevice, Join, Send, Timer };
  struct Event {
    double t;
    std::uint64_t seq;
    Kind kind;
    DeviceId device;
    std::string frame;
    std::uint64_t epoch;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }
  };

  void push(double t, Kind kind, DeviceId device, std::string frame = {},
            std::uint64_t epoch = 0);
  std::string wire_frame(const Message& m);
  void dispatch(const Event& e);
  void to_gateway(const Message& m);
  void deliver_gateway(std::vector<Outbound> out);
  void after_device(DeviceNode& dev, std::uint64_t epoch_before);
  void arm_timer();

  GatewayNode& gateway_;
  TransportProfile profile_;
  DelaySampler delays_;
  std::map<DeviceId, DeviceNode*> devices_;
  std::map<DeviceId, bool> aborted_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  std::size_t rounds_seen_ = 0;
  double armed_ = -1.0;
  RoundGate gate_;
  bool record_ = false;
  std::vector<std::string> wire_;
  SessionLog log_;
};

}  // namespace freqadmm::net
