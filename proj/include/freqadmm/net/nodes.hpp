#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "freqadmm/core/budget.hpp"
#include "freqadmm/core/solver.hpp"
#include "freqadmm/core/trace.hpp"
#include "freqadmm/core/utility.hpp"
#include "freqadmm/net/dfwf.hpp"
#include "freqadmm/net/message.hpp"

namespace freqadmm::net {

struct LogEvent {
  double time = 0.0;
  std::string source;
  std::string kind;
  std::string detail;
};
using SessionLog = std::vector<LogEvent>;

/// Ordered, unbounded buffer between the gateway and a detector. push never
/// blocks on the consumer.
class RowTap {
 public:
  void push(const TraceRow& row);
  void close();
  // Blocks until a row is available or the tap is closed and drained.
  std::optional<TraceRow> pop();
  std::vector<TraceRow> drain();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<TraceRow> rows_;
  bool closed_ = false;
};

struct GatewayConfig {
  double c = 0.0;
  double d = 0.0;
  SolverConfig solver;
  std::size_t expected_devices = 1;  // rounds begin once this many register
  std::size_t final_rounds = 10;     // consecutive satisfied rounds before Final
  std::size_t dfwf_window = kDefaultDfwfWindow;
  bool continuous = false;           // never finalize (campaign runs)
  double round_timeout = 0.05;       // seconds on the session clock
};

struct Outbound {
  DeviceId to = 0;
  Message msg;
};

enum class GatewayPhase { Registering, Iterating, Converged };

/// Gateway protocol state machine. Transport-agnostic: every input carries
/// the session time and every output is a message addressed to a device.
///
/// Rounds are barriers over all registered devices. A Reconfigure received
/// mid-round is applied just before that round's projection; a join is
/// applied after it. Devices that joined, or all devices after a change
/// while converged, are restarted with a Resume broadcast.
class GatewayNode {
 public:
  explicit GatewayNode(GatewayConfig cfg);

  std::vector<Outbound> on_message(const Message& m, double now);
  // Logs a stall for a round past its timeout and re-arms the timer.
  void on_timer(double now);
  [[nodiscard]] std::optional<double> deadline() const;

  void attach(std::shared_ptr<RowTap> tap) { taps_.push_back(std::move(tap)); }

  [[nodiscard]] GatewayPhase phase() const { return phase_; }
  [[nodiscard]] const ResourceBudget& budget() const { return budget_; }
  [[nodiscard]] const std::vector<DeviceId>& devices() const { return ids_; }
  [[nodiscard]] const std::vector<double>& z() const { return z_; }
  [[nodiscard]] std::int64_t iteration() const { return iteration_; }
  [[nodiscard]] std::size_t rounds() const { return rounds_; }
  [[nodiscard]] const std::vector<TraceRow>& trace() const { return trace_; }
  [[nodiscard]] const Residuals& last_residuals() const { return res_; }
  // Iteration at which the latest Final was sent, if any.
  [[nodiscard]] std::optional<std::int64_t> finalized_at() const { return final_at_; }
  [[nodiscard]] const SessionLog& log() const { return log_; }
  [[nodiscard]] std::size_t packets(DeviceId id) const;
  [[nodiscard]] std::optional<FrequencyEstimate> estimate(DeviceId id) const;
  [[nodiscard]] const GatewayConfig& config() const { return cfg_; }

 private:
  struct Slot {
    double v = 0.0;
    bool have_v = false;
    double u_prev = 0.0;
  };

  std::vector<Outbound> on_register(const Register& r, double now);
  std::vector<Outbound> on_vupdate(const VUpdate& m, double now);
  std::vector<Outbound> on_reconfigure(const Reconfigure& m, double now);
  void on_packet(const DataPacket& p, double now);

  bool apply_reconfigure(const Reconfigure& m, double now);
  bool admit(const Register& r, double now);
  void order_by_id();
  std::vector<Outbound> complete_round(double now);
  std::vector<Outbound> restart(double now, const std::vector<DeviceId>& fresh);
  void note(double now, std::string kind, std::string detail);

  GatewayConfig cfg_;
  ResourceBudget budget_;
  std::vector<DeviceId> ids_;
  std::map<DeviceId, std::size_t> index_;
  std::vector<Slot> slots_;
  std::vector<double> z_;
  GatewayPhase phase_ = GatewayPhase::Registering;
  std::int64_t iteration_ = 0;  // last completed round
  std::int64_t awaiting_ = 0;   // round whose v values are being collected
  std::size_t rounds_ = 0;
  std::size_t streak_ = 0;
  double round_start_ = 0.0;
  Residuals res_{};
  std::optional<std::int64_t> final_at_;
  std::vector<Register> pending_joins_;
  std::vector<Reconfigure> pending_reconf_;
  std::map<DeviceId, DfwfWindow> windows_;
  std::map<DeviceId, std::size_t> packet_counts_;
  std::vector<TraceRow> trace_;
  std::vector<std::shared_ptr<RowTap>> taps_;
  SessionLog log_;
};

/// Device protocol state machine. Holds the private utility and the local
/// x and u; only Register, VUpdate, DataPacket and Reconfigure leave it.
class DeviceNode {
 public:
  DeviceNode(DeviceId id, UtilityFunction f, double a, double gamma,
             SolverConfig cfg = {});

  [[nodiscard]] Register hello() const { return {id_, a_, gamma_}; }
  // Replies for the gateway. Throws SolverFailure (after logging) when the
  // local update cannot be solved.
  std::vector<Message> on_message(const Message& m, double now);

  // Takes effect at the next local update.
  void set_function(UtilityFunction f) { f_ = f; }
  // Changes the per-packet size; the returned message tells the gateway.
  Reconfigure resize(double a);

  DataPacket next_packet(double now);

  [[nodiscard]] DeviceId id() const { return id_; }
  [[nodiscard]] const UtilityFunction& function() const { return f_; }
  [[nodiscard]] double a() const { return a_; }
  [[nodiscard]] double gamma() const { return gamma_; }
  [[nodiscard]] bool sending() const { return sending_; }
  [[nodiscard]] double rate() const { return rate_; }
  // Incremented whenever the data phase starts or stops.
  [[nodiscard]] std::uint64_t epoch() const { return epoch_; }
  // Local iterates. Ground truth for tests; never serialized.
  [[nodiscard]] double x() const { return x_; }
  [[nodiscard]] double u() const { return u_; }
  [[nodiscard]] double z() const { return z_; }
  [[nodiscard]] const SessionLog& log() const { return log_; }

 private:
  void note(double now, std::string kind, std::string detail);
  double update_x(double now);

  DeviceId id_;
  UtilityFunction f_;
  double a_;
  double gamma_;
  SolverConfig cfg_;
  double x_;
  double u_ = 0.0;
  double z_;
  std::int64_t last_iteration_ = -1;
  bool sending_ = false;
  double rate_ = 0.0;
  std::uint64_t epoch_ = 0;
  std::uint64_t seq_ = 0;
  SessionLog log_;
};

}  // namespace freqadmm::net
