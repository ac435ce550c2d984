#include <algorithm>
#include <cmath>
#include <sstream>

#include "freqadmm/core/errors.hpp"
#include "freqadmm/core/projection.hpp"
#include "freqadmm/net/nodes.hpp"

namespace freqadmm::net {

void RowTap::push(const TraceRow& row) {
  {
    std::lock_guard lk(mu_);
    rows_.push_back(row);
  }
  cv_.notify_one();
}

void RowTap::close() {
  {
    std::lock_guard lk(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::optional<TraceRow> RowTap::pop() {
  std::unique_lock lk(mu_);
  cv_.wait(lk, [&] { return closed_ || !rows_.empty(); });
  if (rows_.empty()) return std::nullopt;
  TraceRow r = std::move(rows_.front());
  rows_.pop_front();
  return r;
}

std::vector<TraceRow> RowTap::drain() {
  std::lock_guard lk(mu_);
  std::vector<TraceRow> out(std::make_move_iterator(rows_.begin()),
                            std::make_move_iterator(rows_.end()));
  rows_.clear();
  return out;
}

GatewayNode::GatewayNode(GatewayConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.solver.validate();
  if (!(cfg_.c > 0.0) || !(cfg_.d > 0.0)) {
    throw BudgetError("gateway capacities must be positive");
  }
  if (cfg_.expected_devices == 0 || cfg_.final_rounds == 0 ||
      cfg_.dfwf_window < 2 || !(cfg_.round_timeout > 0.0)) {
    throw std::invalid_argument("invalid gateway configuration");
  }
  budget_.c = cfg_.c;
  budget_.d = cfg_.d;
}

void GatewayNode::note(double now, std::string kind, std::string detail) {
  log_.push_back({now, "gateway", std::move(kind), std::move(detail)});
}

std::optional<double> GatewayNode::deadline() const {
  if (phase_ != GatewayPhase::Iterating) return std::nullopt;
  return round_start_ + cfg_.round_timeout;
}

void GatewayNode::on_timer(double now) {
  const auto dl = deadline();
  if (!dl || now < *dl) return;
  std::ostringstream missing;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!slots_[i].have_v) missing << (missing.tellp() > 0 ? "," : "") << ids_[i];
  }
  note(now, "stall", "round " + std::to_string(awaiting_) + " missing " + missing.str());
  round_start_ = now;
}

std::size_t GatewayNode::packets(DeviceId id) const {
  auto it = packet_counts_.find(id);
  return it == packet_counts_.end() ? 0 : it->second;
}

std::optional<FrequencyEstimate> GatewayNode::estimate(DeviceId id) const {
  auto it = windows_.find(id);
  if (it == windows_.end() || !it->second.ready()) return std::nullopt;
  return it->second.estimate(id);
}

std::vector<Outbound> GatewayNode::on_message(const Message& m, double now) {
  if (const auto* r = std::get_if<Register>(&m)) return on_register(*r, now);
  if (const auto* v = std::get_if<VUpdate>(&m)) return on_vupdate(*v, now);
  if (const auto* c = std::get_if<Reconfigure>(&m)) return on_reconfigure(*c, now);
  if (const auto* p = std::get_if<DataPacket>(&m)) {
    on_packet(*p, now);
    return {};
  }
  if (const auto* a = std::get_if<AnomalyAlert>(&m)) {
    note(now, "alert", "device " + std::to_string(a->device_id) + ": " + a->detail);
    return {};
  }
  note(now, "unexpected", kind_name(m));
  return {};
}

bool GatewayNode::admit(const Register& r, double now) {
  ResourceBudget next = budget_;
  next.a.push_back(r.a);
  next.gamma.push_back(r.gamma);
  try {
    next.validate();
  } catch (const BudgetError& e) {
    note(now, "registration_rejected",
         "device " + std::to_string(r.device_id) + ": " + e.what());
    return false;
  }
  budget_ = std::move(next);
  index_[r.device_id] = ids_.size();
  ids_.push_back(r.device_id);
  slots_.push_back({});
  z_.push_back(r.gamma);
  windows_.emplace(r.device_id, DfwfWindow(cfg_.dfwf_window));
  note(now, "registered", "device " + std::to_string(r.device_id));
  return true;
}

std::vector<Outbound> GatewayNode::on_register(const Register& r, double now) {
  const bool pending = std::any_of(pending_joins_.begin(), pending_joins_.end(),
                                   [&](const Register& p) { return p.device_id == r.device_id; });
  if (index_.count(r.device_id) || pending) {
    note(now, "registration_rejected",
         "duplicate device " + std::to_string(r.device_id));
    return {};
  }
  switch (phase_) {
    case GatewayPhase::Registering:
      if (!admit(r, now)) return {};
      if (ids_.size() >= cfg_.expected_devices) {
        order_by_id();
        return restart(now, ids_);
      }
      return {};
    case GatewayPhase::Iterating:
      pending_joins_.push_back(r);
      return {};
    case GatewayPhase::Converged:
      if (!admit(r, now)) return {};
      return restart(now, {r.device_id});
  }
  return {};
}

// Initial devices are indexed by id so the consensus vector does not
// depend on the order in which registrations arrived.
void GatewayNode::order_by_id() {
  std::vector<std::size_t> perm(ids_.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(), [&](auto l, auto r) { return ids_[l] < ids_[r]; });
  auto permute = [&](auto& vec) {
    auto copy = vec;
    for (std::size_t i = 0; i < perm.size(); ++i) vec[i] = copy[perm[i]];
  };
  permute(ids_);
  permute(slots_);
  permute(z_);
  permute(budget_.a);
  permute(budget_.gamma);
  for (std::size_t i = 0; i < ids_.size(); ++i) index_[ids_[i]] = i;
}

// Broadcasts Resume to every device: the fresh ones start from gamma, the
// others from their current consensus.
std::vector<Outbound> GatewayNode::restart(double now,
                                           const std::vector<DeviceId>& fresh) {
  phase_ = GatewayPhase::Iterating;
  streak_ = 0;
  awaiting_ = iteration_ + 1;
  round_start_ = now;
  std::vector<Outbound> out;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    slots_[i].have_v = false;
    out.push_back({ids_[i], ZBroadcast{ids_[i], iteration_, z_[i], BroadcastStatus::Resume}});
  }
  std::string who;
  for (auto id : fresh) who += (who.empty() ? "" : ",") + std::to_string(id);
  note(now, "resume", "fresh " + who);
  return out;
}

std::vector<Outbound> GatewayNode::on_vupdate(const VUpdate& m, double now) {
  auto it = index_.find(m.device_id);
  if (it == index_.end() || phase_ != GatewayPhase::Iterating ||
      m.iteration != awaiting_ || slots_[it->second].have_v) {
    note(now, "stale_v",
         "device " + std::to_string(m.device_id) + " iteration " + std::to_string(m.iteration));
    return {};
  }
  slots_[it->second].v = m.v;
  slots_[it->second].have_v = true;
  for (const auto& s : slots_) {
    if (!s.have_v) return {};
  }
  return complete_round(now);
}

bool GatewayNode::apply_reconfigure(const Reconfigure& m, double now) {
  ResourceBudget next = budget_;
  next.c += m.delta_c;
  next.d += m.delta_d;
  if (m.a) {
    auto it = m.origin >= 0 ? index_.find(static_cast<DeviceId>(m.origin)) : index_.end();
    if (it == index_.end()) {
      note(now, "reconfigure_rejected", "unknown origin " + std::to_string(m.origin));
      return false;
    }
    next.a[it->second] = *m.a;
  }
  try {
    if (!ids_.empty()) next.validate();
    else if (!(next.c > 0.0) || !(next.d > 0.0)) throw BudgetError("non-positive capacity");
  } catch (const BudgetError& e) {
    note(now, "reconfigure_rejected", e.what());
    return false;
  }
  budget_ = std::move(next);
  std::ostringstream os;
  os << "origin " << m.origin << " c=" << budget_.c << " d=" << budget_.d;
  note(now, "reconfigured", os.str());
  return true;
}

std::vector<Outbound> GatewayNode::on_reconfigure(const Reconfigure& m, double now) {
  switch (phase_) {
    case GatewayPhase::Registering:
      apply_reconfigure(m, now);
      return {};
    case GatewayPhase::Iterating:
      pending_reconf_.push_back(m);
      return {};
    case GatewayPhase::Converged:
      if (!apply_reconfigure(m, now)) return {};
      return restart(now, {});
  }
  return {};
}

void GatewayNode::on_packet(const DataPacket& p, double now) {
  auto it = windows_.find(p.device_id);
  if (it == windows_.end()) {
    note(now, "unexpected", "packet from unknown device " + std::to_string(p.device_id));
    return;
  }
  it->second.push(now);
  ++packet_counts_[p.device_id];
}

std::vector<Outbound> GatewayNode::complete_round(double now) {
  bool changed = false;
  for (const auto& m : pending_reconf_) changed |= apply_reconfigure(m, now);
  pending_reconf_.clear();

  const std::size_t n = ids_.size();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = slots_[i].v;
  const std::vector<double> z_prev = z_;
  z_ = project_onto_feasible(v, budget_, cfg_.solver);

  // u = v - z reconstructs the device duals; their change is x - z.
  double primal = 0.0;
  double dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = v[i] - z_[i];
    primal += (u - slots_[i].u_prev) * (u - slots_[i].u_prev);
    dual += (z_[i] - z_prev[i]) * (z_[i] - z_prev[i]);
    slots_[i].u_prev = u;
    slots_[i].have_v = false;
  }
  res_ = {std::sqrt(primal), cfg_.solver.rho * std::sqrt(dual)};
  iteration_ = awaiting_;
  ++rounds_;

  TraceRow row;
  row.iteration = iteration_;
  row.z = z_;
  row.v = std::move(v);
  for (auto& tap : taps_) tap->push(row);
  trace_.push_back(std::move(row));

  if (changed) streak_ = 0;
  const bool ok = res_.primal <= cfg_.solver.primal_tol && res_.dual <= cfg_.solver.dual_tol;
  streak_ = ok ? streak_ + 1 : 0;

  std::vector<DeviceId> joined;
  for (const auto& r : pending_joins_) {
    if (admit(r, now)) joined.push_back(r.device_id);
  }
  pending_joins_.clear();

  BroadcastStatus status = BroadcastStatus::Continue;
  if (!joined.empty()) {
    streak_ = 0;
  } else if (!cfg_.continuous && streak_ >= cfg_.final_rounds) {
    status = BroadcastStatus::Final;
  }

  std::vector<Outbound> out;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const bool fresh = i >= n;
    out.push_back({ids_[i], ZBroadcast{ids_[i], iteration_, z_[i],
                                       fresh ? BroadcastStatus::Resume : status}});
  }

  if (status == BroadcastStatus::Final) {
    phase_ = GatewayPhase::Converged;
    final_at_ = iteration_;
    for (auto& [id, w] : windows_) w.reset();
    std::ostringstream os;
    os << "iteration " << iteration_ << " z=";
    for (std::size_t i = 0; i < n; ++i) os << (i ? "," : "") << z_[i];
    note(now, "converged", os.str());
  } else {
    awaiting_ = iteration_ + 1;
    round_start_ = now;
  }
  return out;
}

}  // namespace freqadmm::net
