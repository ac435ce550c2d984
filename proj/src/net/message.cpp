#include "freqadmm/net/message.hpp"

#include <charconv>
#include <cstdio>
#include <map>

namespace freqadmm::net {

namespace {

std::string fmt_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw WireError("unencodable real");
  return {buf, end};
}

template <typename Int>
std::string fmt_int(Int x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return {buf, end};
}

std::string percent_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char ch : s) {
    if (ch > 0x20 && ch < 0x7f && ch != '%' && ch != '=') {
      out.push_back(static_cast<char>(ch));
    } else {
      out.push_back('%');
      out.push_back(hex[ch >> 4]);
      out.push_back(hex[ch & 15]);
    }
  }
  return out;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out.push_back(s[i]);
      continue;
    }
    if (i + 2 >= s.size()) throw WireError("truncated escape");
    const int hi = hex_value(s[i + 1]);
    const int lo = hex_value(s[i + 2]);
    if (hi < 0 || lo < 0) throw WireError("bad escape");
    out.push_back(static_cast<char>(hi * 16 + lo));
    i += 2;
  }
  return out;
}

class Fields {
 public:
  explicit Fields(std::string_view body) {
    while (!body.empty()) {
      const auto sp = body.find(' ');
      const auto tok = body.substr(0, sp);
      body = sp == std::string_view::npos ? std::string_view{} : body.substr(sp + 1);
      if (tok.empty()) throw WireError("empty field");
      const auto eq = tok.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        throw WireError("field without key: " + std::string(tok));
      }
      if (!kv_.emplace(tok.substr(0, eq), tok.substr(eq + 1)).second) {
        throw WireError("repeated field: " + std::string(tok.substr(0, eq)));
      }
    }
  }

  std::string_view raw(std::string_view key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw WireError("missing field: " + std::string(key));
    std::string_view v = it->second;
    kv_.erase(it);
    return v;
  }

  bool has(std::string_view key) const { return kv_.count(key) != 0; }

  double real(std::string_view key) {
    const auto s = raw(key);
    double x = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || p != s.data() + s.size()) {
      throw WireError("bad real in " + std::string(key));
    }
    return x;
  }

  template <typename Int>
  Int integer(std::string_view key) {
    const auto s = raw(key);
    Int x{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || p != s.data() + s.size()) {
      throw WireError("bad integer in " + std::string(key));
    }
    return x;
  }

  void done() const {
    if (!kv_.empty()) throw WireError("unknown field: " + std::string(kv_.begin()->first));
  }

 private:
  std::map<std::string_view, std::string_view, std::less<>> kv_;
};

BroadcastStatus parse_status(std::string_view s) {
  if (s == "resume") return BroadcastStatus::Resume;
  if (s == "continue") return BroadcastStatus::Continue;
  if (s == "final") return BroadcastStatus::Final;
  throw WireError("bad status: " + std::string(s));
}

struct Encoder {
  std::string operator()(const Register& m) const {
    return "Register device_id=" + fmt_int(m.device_id) + " a=" + fmt_double(m.a) +
           " gamma=" + fmt_double(m.gamma);
  }
  std::string operator()(const VUpdate& m) const {
    return "VUpdate device_id=" + fmt_int(m.device_id) +
           " iteration=" + fmt_int(m.iteration) + " v=" + fmt_double(m.v);
  }
  std::string operator()(const ZBroadcast& m) const {
    return "ZBroadcast device_id=" + fmt_int(m.device_id) +
           " iteration=" + fmt_int(m.iteration) + " z=" + fmt_double(m.z) +
           " status=" + status_name(m.status);
  }
  std::string operator()(const DataPacket& m) const {
    return "DataPacket device_id=" + fmt_int(m.device_id) +
           " timestamp=" + fmt_double(m.timestamp) +
           " payload_size=" + fmt_int(m.payload_size) + " seq=" + fmt_int(m.seq);
  }
  std::string operator()(const Reconfigure& m) const {
    std::string s = "Reconfigure origin=" + fmt_int(m.origin) +
                    " delta_c=" + fmt_double(m.delta_c) +
                    " delta_d=" + fmt_double(m.delta_d);
    if (m.a) s += " a=" + fmt_double(*m.a);
    return s;
  }
  std::string operator()(const AnomalyAlert& m) const {
    return "AnomalyAlert device_id=" + fmt_int(m.device_id) +
           " detail=" + percent_encode(m.detail);
  }
};

}  // namespace

const char* kind_name(const Message& m) {
  static const char* names[] = {"Register",   "VUpdate",     "ZBroadcast",
                                "DataPacket", "Reconfigure", "AnomalyAlert"};
  return names[m.index()];
}

const char* status_name(BroadcastStatus s) {
  switch (s) {
    case BroadcastStatus::Resume: return "resume";
    case BroadcastStatus::Continue: return "continue";
    case BroadcastStatus::Final: return "final";
  }
  return "?";
}

std::string encode(const Message& m) { return std::visit(Encoder{}, m); }

Message decode(std::string_view record) {
  const auto sp = record.find(' ');
  const auto kind = record.substr(0, sp);
  Fields f(sp == std::string_view::npos ? std::string_view{} : record.substr(sp + 1));
  Message out;
  if (kind == "Register") {
    Register r;
    r.device_id = f.integer<DeviceId>("device_id");
    r.a = f.real("a");
    r.gamma = f.real("gamma");
    out = r;
  } else if (kind == "VUpdate") {
    VUpdate r;
    r.device_id = f.integer<DeviceId>("device_id");
    r.iteration = f.integer<std::int64_t>("iteration");
    r.v = f.real("v");
    out = r;
  } else if (kind == "ZBroadcast") {
    ZBroadcast r;
    r.device_id = f.integer<DeviceId>("device_id");
    r.iteration = f.integer<std::int64_t>("iteration");
    r.z = f.real("z");
    r.status = parse_status(f.raw("status"));
    out = r;
  } else if (kind == "DataPacket") {
    DataPacket r;
    r.device_id = f.integer<DeviceId>("device_id");
    r.timestamp = f.real("timestamp");
    r.payload_size = f.integer<std::uint32_t>("payload_size");
    r.seq = f.integer<std::uint64_t>("seq");
    out = r;
  } else if (kind == "Reconfigure") {
    Reconfigure r;
    r.origin = f.integer<std::int64_t>("origin");
    r.delta_c = f.real("delta_c");
    r.delta_d = f.real("delta_d");
    if (f.has("a")) r.a = f.real("a");
    out = r;
  } else if (kind == "AnomalyAlert") {
    AnomalyAlert r;
    r.device_id = f.integer<DeviceId>("device_id");
    r.detail = percent_decode(f.raw("detail"));
    out = r;
  } else {
    throw WireError("unknown message kind: " + std::string(kind));
  }
  f.done();
  return out;
}

std::string frame(const Message& m) {
  const std::string body = encode(m);
  return fmt_int(body.size()) + " " + body + "\n";
}

void FrameReader::feed(std::string_view bytes) {
  if (pos_ > 4096 && pos_ * 2 > buf_.size()) {
    buf_.erase(0, pos_);
    pos_ = 0;
  }
  buf_.append(bytes);
}

std::optional<Message> FrameReader::next() {
  const std::size_t sp = buf_.find(' ', pos_);
  if (sp == std::string::npos) {
    if (buf_.size() - pos_ > 20) throw WireError("frame length prefix too long");
    return std::nullopt;
  }
  std::size_t len = 0;
  const char* first = buf_.data() + pos_;
  const char* last = buf_.data() + sp;
  auto [p, ec] = std::from_chars(first, last, len);
  if (ec != std::errc{} || p != last || sp == pos_) {
    throw WireError("bad frame length prefix");
  }
  const std::size_t body = sp + 1;
  if (buf_.size() < body + len + 1) return std::nullopt;
  if (buf_[body + len] != '\n') throw WireError("frame not newline terminated");
  Message m = decode(std::string_view(buf_.data() + body, len));
  pos_ = body + len + 1;
  return m;
}

}  // namespace freqadmm::net
