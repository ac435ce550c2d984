#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "freqadmm/anomaly/manipulation.hpp"
#include "freqadmm/core/solver.hpp"
#include "freqadmm/core/trace.hpp"
#include "freqadmm/net/nodes.hpp"
#include "freqadmm/net/transport.hpp"

namespace freqadmm::anomaly {

// A plant stopped before the driver asked it to (a device aborted, the
// transport failed).
class PlantFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Called after every completed round. Changes requested through
// Plant::apply take effect from the next round. Return false to stop.
using RoundHook = std::function<bool(const TraceRow&)>;

/// Something that runs the ADMM rounds of a Problem and lets a driver change
/// the problem between rounds.
class Plant {
 public:
  virtual ~Plant() = default;

  // Runs rounds from a cold start until `hook` returns false.
  virtual void run(const RoundHook& hook) = 0;

  // Moves the running problem to `next`: changed functions are swapped in
  // on the devices, changed packet sizes are announced by their devices,
  // and changed capacities arrive as a systemic reconfiguration. Only valid
  // inside the hook.
  void apply(const Problem& next);

  [[nodiscard]] const Problem& problem() const { return current_; }

 protected:
  explicit Plant(Problem initial) : current_(std::move(initial)) {}

  virtual void set_function(std::size_t i, const UtilityFunction& f) = 0;
  virtual void set_size(std::size_t i, double a) = 0;
  virtual void shift_capacity(double delta_c, double delta_d) = 0;

  Problem current_;
};

// In-process engine; no transport at all.
std::unique_ptr<Plant> make_engine_plant(Problem problem, SolverConfig cfg = {});

// Gateway and devices exchanging wire messages over the given transport
// (simulated or TCP). Devices get ids 1..n in problem order.
std::unique_ptr<Plant> make_protocol_plant(Problem problem, net::TransportProfile transport,
                                           SolverConfig cfg = {});

}  // namespace freqadmm::anomaly
