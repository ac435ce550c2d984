#include "freqadmm/net/transport.hpp"

#include <algorithm>
#include <stdexcept>

namespace freqadmm::net {

const char* mode_name(TransportMode m) {
  return m == TransportMode::Simulated ? "sim" : "socket";
}

LinkProfile TransportProfile::link(DeviceId id) const {
  auto it = links.find(id);
  if (it != links.end()) return it->second;
  return {base_delay_ms, jitter_ms};
}

double TransportProfile::round_timeout() const {
  double base = base_delay_ms;
  for (const auto& [id, l] : links) base = std::max(base, l.base_delay_ms);
  return 50.0 * std::max(base, 1.0) / 1000.0;
}

void TransportProfile::validate() const {
  auto check = [](const LinkProfile& l) {
    if (!(l.base_delay_ms >= 0.0) || !(l.jitter_ms >= 0.0)) {
      throw std::invalid_argument("transport delays must be >= 0");
    }
  };
  check({base_delay_ms, jitter_ms});
  for (const auto& [id, l] : links) check(l);
  if (!(time_compression > 0.0)) {
    throw std::invalid_argument("time_compression must be positive");
  }
}

double DelaySampler::draw(const LinkProfile& link) {
  const double unit = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const double ms = link.base_delay_ms + link.jitter_ms * (2.0 * unit - 1.0);
  return std::max(0.0, ms) / 1000.0;
}

}  // namespace freqadmm::net
