#include "freqadmm/net/dfwf.hpp"

#include <vector>

#include "freqadmm/core/errors.hpp"

namespace freqadmm::net {

FrequencyEstimate estimate_dfwf(std::span<const double> timestamps,
                                std::size_t window) {
  if (timestamps.size() < 2 || window < 2) {
    throw ContractViolation("estimate_dfwf: need at least two timestamps");
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (timestamps[i] < timestamps[i - 1]) {
      throw ContractViolation("estimate_dfwf: timestamps not monotone");
    }
  }
  const std::size_t n = std::min(window, timestamps.size());
  const double span = timestamps.back() - timestamps[timestamps.size() - n];
  if (!(span > 0.0)) throw ContractViolation("estimate_dfwf: zero time span");
  FrequencyEstimate e;
  e.window_packets = n;
  e.estimated_hz = static_cast<double>(n - 1) / span;
  return e;
}

FrequencyEstimate against_theory(FrequencyEstimate e, double theoretical_hz) {
  if (theoretical_hz > 0.0 && e.estimated_hz > 0.0) {
    e.delay_ms = 1000.0 * (1.0 / e.estimated_hz - 1.0 / theoretical_hz);
  }
  return e;
}

void DfwfWindow::push(double t) {
  if (!stamps_.empty() && t < stamps_.back()) {
    throw ContractViolation("DfwfWindow: receive time went backwards");
  }
  stamps_.push_back(t);
  while (stamps_.size() > window_) stamps_.pop_front();
}

FrequencyEstimate DfwfWindow::estimate(DeviceId id) const {
  const std::vector<double> v(stamps_.begin(), stamps_.end());
  auto e = estimate_dfwf(v, window_);
  e.device_id = id;
  return e;
}

}  // namespace freqadmm::net
