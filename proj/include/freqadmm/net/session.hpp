#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "freqadmm/core/budget.hpp"
#include "freqadmm/core/solver.hpp"
#include "freqadmm/core/trace.hpp"
#include "freqadmm/core/utility.hpp"
#include "freqadmm/net/dfwf.hpp"
#include "freqadmm/net/nodes.hpp"
#include "freqadmm/net/transport.hpp"

namespace freqadmm::net {

struct DeviceSpec {
  DeviceId id = 0;
  UtilityFunction f;
  double a = 0.0;
  double gamma = 0.0;
};

/// An allocation session: the initial devices converge and stream data
/// until every DFWF window is full; then each joiner in turn registers and
/// the system re-converges and refills its windows.
struct SessionPlan {
  double c = 0.0;
  double d = 0.0;
  std::vector<DeviceSpec> devices;
  std::vector<DeviceSpec> joiners;
  SolverConfig solver;
  std::size_t window = kDefaultDfwfWindow;
  TransportProfile transport;
  bool record_wire = false;  // simulated transport only
  double stage_horizon = 1e5;  // session seconds allowed per stage
};

struct StageReport {
  std::vector<DeviceId> devices;
  ResourceBudget budget;
  bool converged = false;
  std::int64_t final_iteration = -1;
  std::vector<double> z;  // consensus sent with Final
  std::vector<FrequencyEstimate> estimates;  // delay_ms against z
};

// Resource usage implied by the current estimates, sampled at every packet
// arrival once each device has an estimate.
struct UsageSample {
  double time = 0.0;
  std::size_t stage = 0;
  double frequency = 0.0;  // sum of estimates
  double storage = 0.0;    // sum of a_i * estimate_i
  double c = 0.0;
  double d = 0.0;
};

struct SessionReport {
  std::vector<StageReport> stages;
  std::vector<TraceRow> trace;
  std::vector<UsageSample> usage;
  SessionLog log;
  std::vector<std::string> wire;
  bool completed = false;
};

SessionReport run_session(const SessionPlan& plan);

}  // namespace freqadmm::net
