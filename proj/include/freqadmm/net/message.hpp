#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace freqadmm::net {

using DeviceId = std::uint32_t;

// Origin of a Reconfigure that does not come from a device.
inline constexpr std::int64_t kSystemOrigin = -1;

enum class BroadcastStatus { Resume, Continue, Final };

// A device announces its per-packet size and minimum rate. The utility stays
// on the device.
struct Register {
  DeviceId device_id = 0;
  double a = 0.0;
  double gamma = 0.0;
  friend bool operator==(const Register&, const Register&) = default;
};

// v = x + u; x and u are never sent separately.
struct VUpdate {
  DeviceId device_id = 0;
  std::int64_t iteration = 0;
  double v = 0.0;
  friend bool operator==(const VUpdate&, const VUpdate&) = default;
};

// The addressee's own consensus component only.
struct ZBroadcast {
  DeviceId device_id = 0;
  std::int64_t iteration = 0;
  double z = 0.0;
  BroadcastStatus status = BroadcastStatus::Continue;
  friend bool operator==(const ZBroadcast&, const ZBroadcast&) = default;
};

struct DataPacket {
  DeviceId device_id = 0;
  double timestamp = 0.0;  // sender clock, seconds
  std::uint32_t payload_size = 0;
  std::uint64_t seq = 0;
  friend bool operator==(const DataPacket&, const DataPacket&) = default;
};

struct Reconfigure {
  std::int64_t origin = kSystemOrigin;
  double delta_c = 0.0;
  double delta_d = 0.0;
  std::optional<double> a;  // new packet size of `origin`
  friend bool operator==(const Reconfigure&, const Reconfigure&) = default;
};

struct AnomalyAlert {
  DeviceId device_id = 0;
  std::string detail;
  friend bool operator==(const AnomalyAlert&, const AnomalyAlert&) = default;
};

using Message = std::variant<Register, VUpdate, ZBroadcast, DataPacket,
                             Reconfigure, AnomalyAlert>;

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const char* kind_name(const Message& m);
const char* status_name(BroadcastStatus s);

// "Kind key=value ..." with shortest round-trip decimals.
std::string encode(const Message& m);
Message decode(std::string_view record);

// "<decimal length> <record>\n"
std::string frame(const Message& m);

/// Incremental frame parser for a byte stream.
class FrameReader {
 public:
  void feed(std::string_view bytes);
  // Next complete record, or nullopt if more bytes are needed. Throws
  // WireError on a malformed frame.
  std::optional<Message> next();
  [[nodiscard]] std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace freqadmm::net
