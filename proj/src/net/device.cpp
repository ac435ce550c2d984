#include <cmath>

#include "freqadmm/core/errors.hpp"
#include "freqadmm/net/nodes.hpp"

namespace freqadmm::net {

DeviceNode::DeviceNode(DeviceId id, UtilityFunction f, double a, double gamma,
                       SolverConfig cfg)
    : id_(id), f_(f), a_(a), gamma_(gamma), cfg_(cfg), x_(gamma), z_(gamma) {
  cfg_.validate();
  if (!(a > 0.0) || !(gamma >= 0.0)) {
    throw BudgetError("device needs a > 0 and gamma >= 0");
  }
}

void DeviceNode::note(double now, std::string kind, std::string detail) {
  log_.push_back({now, "device " + std::to_string(id_), std::move(kind), std::move(detail)});
}

double DeviceNode::update_x(double now) {
  try {
    x_ = local_x_update(f_, z_, u_, cfg_);
  } catch (const std::exception& e) {
    note(now, "x_update_failed", e.what());
    throw;
  }
  return x_ + u_;
}

std::vector<Message> DeviceNode::on_message(const Message& m, double now) {
  const auto* zb = std::get_if<ZBroadcast>(&m);
  if (!zb || zb->device_id != id_) {
    note(now, "unexpected", kind_name(m));
    return {};
  }
  if (zb->status != BroadcastStatus::Resume && zb->iteration <= last_iteration_) {
    note(now, "stale_z", "iteration " + std::to_string(zb->iteration));
    return {};
  }
  last_iteration_ = zb->iteration;
  z_ = zb->z;
  switch (zb->status) {
    case BroadcastStatus::Resume:
      if (sending_) {
        sending_ = false;
        ++epoch_;
      }
      break;
    case BroadcastStatus::Continue:
      u_ = dual_u_update(u_, x_, z_);
      break;
    case BroadcastStatus::Final:
      u_ = dual_u_update(u_, x_, z_);
      rate_ = z_;
      sending_ = rate_ > 0.0;
      ++epoch_;
      note(now, "converged", "rate " + std::to_string(rate_));
      return {};
  }
  const double v = update_x(now);
  return {VUpdate{id_, zb->iteration + 1, v}};
}

Reconfigure DeviceNode::resize(double a) {
  if (!(a > 0.0)) throw BudgetError("packet size must be positive");
  a_ = a;
  Reconfigure r;
  r.origin = id_;
  r.a = a;
  return r;
}

DataPacket DeviceNode::next_packet(double now) {
  // a is in MB; the payload itself is not materialized on the wire.
  return {id_, now, static_cast<std::uint32_t>(std::lround(a_ * 1e6)), seq_++};
}

}  // namespace freqadmm::net
