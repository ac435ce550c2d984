#include "freqadmm/net/sim.hpp"

#include <cmath>

namespace freqadmm::net {

namespace {

Message unframe(const std::string& bytes) {
  FrameReader r;
  r.feed(bytes);
  auto m = r.next();
  if (!m || r.buffered() != 0) throw WireError("partial frame in simulated channel");
  return *m;
}

}  // namespace

SimNetwork::SimNetwork(GatewayNode& gateway, TransportProfile profile)
    : gateway_(gateway), profile_(std::move(profile)), delays_(profile_.seed) {
  profile_.validate();
}

void SimNetwork::push(double t, Kind kind, DeviceId device, std::string frame,
                      std::uint64_t epoch) {
  queue_.push({t, seq_++, kind, device, std::move(frame), epoch});
}

std::string SimNetwork::wire_frame(const Message& m) {
  std::string f = frame(m);
  if (record_) wire_.push_back(f);
  return f;
}

void SimNetwork::attach(DeviceNode& device, double at) {
  devices_[device.id()] = &device;
  push(std::max(at, now_), Kind::Join, device.id());
}

void SimNetwork::inject(const Message& m) { to_gateway(m); }

void SimNetwork::to_gateway(const Message& m) {
  deliver_gateway(gateway_.on_message(m, now_));
}

void SimNetwork::deliver_gateway(std::vector<Outbound> out) {
  if (gateway_.rounds() > rounds_seen_) {
    rounds_seen_ = gateway_.rounds();
    if (gate_) {
      for (const auto& m : gate_(gateway_.trace().back())) {
        auto more = gateway_.on_message(m, now_);
        out.insert(out.end(), std::make_move_iterator(more.begin()),
                   std::make_move_iterator(more.end()));
      }
    }
  }
  for (auto& o : out) {
    push(now_ + delays_.draw(profile_.link(o.to)), Kind::ToDevice, o.to, wire_frame(o.msg));
  }
  arm_timer();
}

void SimNetwork::arm_timer() {
  const auto dl = gateway_.deadline();
  if (dl && *dl != armed_) {
    armed_ = *dl;
    push(*dl, Kind::Timer, 0);
  }
}

void SimNetwork::after_device(DeviceNode& dev, std::uint64_t epoch_before) {
  if (dev.epoch() != epoch_before && dev.sending()) {
    push(now_, Kind::Send, dev.id(), {}, dev.epoch());
  }
}

void SimNetwork::dispatch(const Event& e) {
  switch (e.kind) {
    case Kind::Join: {
      DeviceNode& dev = *devices_.at(e.device);
      push(now_ + delays_.draw(profile_.link(e.device)), Kind::ToGateway, e.device,
           wire_frame(dev.hello()));
      break;
    }
    case Kind::ToGateway:
      to_gateway(unframe(e.frame));
      break;
    case Kind::ToDevice: {
      auto it = devices_.find(e.device);
      if (it == devices_.end() || aborted_[e.device]) break;
      DeviceNode& dev = *it->second;
      const auto epoch = dev.epoch();
      std::vector<Message> replies;
      try {
        replies = dev.on_message(unframe(e.frame), now_);
      } catch (const std::exception& ex) {
        aborted_[e.device] = true;
        log_.push_back({now_, "sim", "device_aborted",
                        "device " + std::to_string(e.device) + ": " + ex.what()});
        break;
      }
      for (const auto& r : replies) {
        push(now_ + delays_.draw(profile_.link(e.device)), Kind::ToGateway, e.device,
             wire_frame(r));
      }
      after_device(dev, epoch);
      break;
    }
    case Kind::Send: {
      DeviceNode& dev = *devices_.at(e.device);
      if (aborted_[e.device] || !dev.sending() || dev.epoch() != e.epoch) break;
      const double d = delays_.draw(profile_.link(e.device));
      push(now_ + d, Kind::ToGateway, e.device, wire_frame(dev.next_packet(now_)));
      push(now_ + d + 1.0 / dev.rate(), Kind::Send, e.device, {}, e.epoch);
      break;
    }
    case Kind::Timer:
      if (armed_ == now_) armed_ = -1.0;
      gateway_.on_timer(now_);
      arm_timer();
      break;
  }
}

bool SimNetwork::run_until(const std::function<bool()>& done, double horizon) {
  if (done()) return true;
  while (!queue_.empty() && queue_.top().t <= horizon) {
    Event e = queue_.top();
    queue_.pop();
    now_ = e.t;
    dispatch(e);
    if (done()) return true;
  }
  if (std::isfinite(horizon)) now_ = std::max(now_, horizon);
  return false;
}

void SimNetwork::run_for(double seconds) {
  run_until([] { return false; }, now_ + seconds);
}

}  // namespace freqadmm::net
