#pragma once

#include <cstddef>
#include <deque>
#include <span>

#include "freqadmm/net/message.hpp"

namespace freqadmm::net {

inline constexpr std::size_t kDefaultDfwfWindow = 300;

struct FrequencyEstimate {
  DeviceId device_id = 0;
  std::size_t window_packets = 0;
  double estimated_hz = 0.0;
  // Mean per-packet overhead against the theoretical rate, when one is
  // known: 1000 * (1/estimated - 1/theoretical).
  double delay_ms = 0.0;
};

/// (n-1) / (t_n - t_1) over the trailing min(window, size) timestamps.
/// Throws ContractViolation on fewer than two stamps, a decreasing stamp,
/// or a zero span.
FrequencyEstimate estimate_dfwf(std::span<const double> timestamps,
                                std::size_t window = kDefaultDfwfWindow);

// Fills delay_ms of an estimate against a theoretical rate.
FrequencyEstimate against_theory(FrequencyEstimate e, double theoretical_hz);

/// Trailing receive-time window of one device.
class DfwfWindow {
 public:
  explicit DfwfWindow(std::size_t window = kDefaultDfwfWindow) : window_(window) {}

  void push(double t);
  void reset() { stamps_.clear(); }
  [[nodiscard]] std::size_t size() const { return stamps_.size(); }
  [[nodiscard]] bool ready() const { return stamps_.size() >= 2; }
  [[nodiscard]] FrequencyEstimate estimate(DeviceId id) const;

 private:
  std::size_t window_;
  std::deque<double> stamps_;
};

}  // namespace freqadmm::net
