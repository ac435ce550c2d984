#include "freqadmm/net/session.hpp"

#include <memory>
#include <thread>

#include "freqadmm/net/sim.hpp"
#include "freqadmm/net/socket.hpp"

namespace freqadmm::net {

namespace {

// Watches a gateway for the end of the current stage and samples usage.
class StageMonitor {
 public:
  StageMonitor(const GatewayNode& gw, std::size_t window, SessionReport& report)
      : gw_(gw), window_(window), report_(report) {}

  // Devices that must be admitted before the stage can end.
  void expect(std::size_t n) { expected_ = n; }

  bool stage_done() {
    if (gw_.phase() != GatewayPhase::Converged || gw_.devices().size() < expected_) {
      return false;
    }
    std::size_t total = 0;
    bool all = true;
    bool full = true;
    double freq = 0.0;
    double storage = 0.0;
    const auto& ids = gw_.devices();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      total += gw_.packets(ids[i]);
      const auto e = gw_.estimate(ids[i]);
      if (!e) {
        all = false;
        full = false;
        continue;
      }
      full = full && e->window_packets >= window_;
      freq += e->estimated_hz;
      storage += gw_.budget().a[i] * e->estimated_hz;
    }
    if (all && total != last_total_) {
      last_total_ = total;
      report_.usage.push_back({now_, report_.stages.size(), freq, storage,
                               gw_.budget().c, gw_.budget().d});
    }
    return full;
  }

  void set_now(double t) { now_ = t; }

  void record() {
    StageReport s;
    s.devices = gw_.devices();
    s.budget = gw_.budget();
    s.converged = gw_.phase() == GatewayPhase::Converged;
    s.final_iteration = gw_.finalized_at().value_or(-1);
    s.z = gw_.z();
    for (std::size_t i = 0; i < s.devices.size(); ++i) {
      if (auto e = gw_.estimate(s.devices[i])) s.estimates.push_back(against_theory(*e, s.z[i]));
    }
    report_.stages.push_back(std::move(s));
  }

 private:
  const GatewayNode& gw_;
  std::size_t window_;
  SessionReport& report_;
  std::size_t last_total_ = 0;
  std::size_t expected_ = 0;
  double now_ = 0.0;
};

GatewayConfig gateway_config(const SessionPlan& plan) {
  GatewayConfig cfg;
  cfg.c = plan.c;
  cfg.d = plan.d;
  cfg.solver = plan.solver;
  cfg.expected_devices = plan.devices.size();
  cfg.dfwf_window = plan.window;
  cfg.round_timeout = plan.transport.round_timeout();
  return cfg;
}

void append(SessionLog& into, const SessionLog& from) {
  into.insert(into.end(), from.begin(), from.end());
}

SessionReport run_simulated(const SessionPlan& plan) {
  SessionReport report;
  GatewayNode gw(gateway_config(plan));
  SimNetwork net(gw, plan.transport);
  net.record_wire(plan.record_wire);
  std::vector<std::unique_ptr<DeviceNode>> nodes;
  auto add = [&](const DeviceSpec& s) {
    nodes.push_back(std::make_unique<DeviceNode>(s.id, s.f, s.a, s.gamma, plan.solver));
    net.attach(*nodes.back());
  };
  for (const auto& s : plan.devices) add(s);

  StageMonitor mon(gw, plan.window, report);
  report.completed = true;
  for (std::size_t stage = 0; stage <= plan.joiners.size(); ++stage) {
    if (stage > 0) add(plan.joiners[stage - 1]);
    mon.expect(plan.devices.size() + stage);
    const bool ok = net.run_until(
        [&] {
          mon.set_now(net.now());
          return mon.stage_done();
        },
        net.now() + plan.stage_horizon);
    mon.record();
    if (!ok) {
      report.completed = false;
      break;
    }
  }
  report.trace = gw.trace();
  append(report.log, gw.log());
  for (const auto& n : nodes) append(report.log, n->log());
  append(report.log, net.log());
  report.wire = net.wire();
  return report;
}

SessionReport run_socket(const SessionPlan& plan) {
  SessionReport report;
  GatewayNode gw(gateway_config(plan));
  SocketGateway server(gw, plan.transport);

  struct Running {
    std::unique_ptr<DeviceNode> node;
    std::unique_ptr<SocketDevice> link;
    std::thread thread;
  };
  std::vector<Running> devices;
  auto add = [&](const DeviceSpec& s) {
    Running r;
    r.node = std::make_unique<DeviceNode>(s.id, s.f, s.a, s.gamma, plan.solver);
    r.link = std::make_unique<SocketDevice>(*r.node, plan.transport, "127.0.0.1", server.port());
    SocketDevice* link = r.link.get();
    r.thread = std::thread([link] {
      try {
        link->run();
      } catch (const std::exception&) {
        // Recorded in the device log.
      }
    });
    devices.push_back(std::move(r));
  };
  for (const auto& s : plan.devices) add(s);

  StageMonitor mon(gw, plan.window, report);
  mon.expect(plan.devices.size());
  std::size_t stage = 0;
  double stage_start = server.now();
  bool finished = false;
  server.serve([&] {
    const double now = server.now();
    mon.set_now(now);
    if (mon.stage_done()) {
      mon.record();
      if (stage == plan.joiners.size()) {
        finished = true;
        return true;
      }
      add(plan.joiners[stage++]);
      mon.expect(plan.devices.size() + stage);
      stage_start = now;
      return false;
    }
    if (now - stage_start > plan.stage_horizon) {
      mon.record();
      return true;
    }
    return false;
  });
  report.completed = finished;
  for (auto& d : devices) {
    d.link->stop();
    d.thread.join();
  }
  report.trace = gw.trace();
  append(report.log, gw.log());
  append(report.log, server.log());
  for (const auto& d : devices) {
    append(report.log, d.node->log());
    append(report.log, d.link->log());
  }
  return report;
}

}  // namespace

SessionReport run_session(const SessionPlan& plan) {
  plan.transport.validate();
  if (plan.transport.mode == TransportMode::Socket) return run_socket(plan);
  return run_simulated(plan);
}

}  // namespace freqadmm::net
