#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "freqadmm/net/message.hpp"

namespace freqadmm::net {

enum class TransportMode { Simulated, Socket };

const char* mode_name(TransportMode m);

struct LinkProfile {
  double base_delay_ms = 0.0;
  double jitter_ms = 0.0;  // uniform half-width
  friend bool operator==(const LinkProfile&, const LinkProfile&) = default;
};

struct TransportProfile {
  TransportMode mode = TransportMode::Simulated;
  double base_delay_ms = 0.0;
  double jitter_ms = 0.0;
  std::uint64_t seed = 1;
  // Session seconds per wall second in socket mode.
  double time_compression = 100.0;
  std::map<DeviceId, LinkProfile> links;  // per-device overrides

  [[nodiscard]] LinkProfile link(DeviceId id) const;
  // 50x the largest base delay, never below 50 ms. In session seconds.
  [[nodiscard]] double round_timeout() const;
  // Throws std::invalid_argument on negative delays or compression <= 0.
  void validate() const;

  friend bool operator==(const TransportProfile&, const TransportProfile&) = default;
};

/// Per-message latency draw, max(0, base + U(-jitter, jitter)), in seconds.
/// The uniform is built from raw engine bits so the sequence is identical
/// across standard libraries.
class DelaySampler {
 public:
  explicit DelaySampler(std::uint64_t seed) : rng_(seed) {}
  double draw(const LinkProfile& link);

 private:
  std::mt19937_64 rng_;
};

}  // namespace freqadmm::net
